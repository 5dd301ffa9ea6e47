#include <fstream>
#include <iomanip>
#include <sstream>

#include "gdisc/filtering.hpp"
#include "gdisc/gnn.hpp"
#include "gdisc/graph.hpp"

namespace gdisc {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path + " failed");
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw IoError(std::string("malformed input: expected ") + what);
  return v;
}

void write_bank_body(std::ostream& out, const Bank& b) {
  out << b.num_filters() << ' ' << b.num_taps() << '\n';
  for (int f = 0; f < b.num_filters(); ++f) {
    for (int k = 0; k < b.num_taps(); ++k) out << (k ? " " : "") << b.taps(f, k);
    out << '\n';
  }
}

Bank read_bank_body(std::istream& in) {
  const auto filters = read_value<long>(in, "filter count");
  const auto taps = read_value<long>(in, "tap count");
  if (filters <= 0 || taps <= 0) throw IoError("bank header must have positive F and K+1");
  Matrix t(filters, taps);
  for (long f = 0; f < filters; ++f)
    for (long k = 0; k < taps; ++k) t(f, k) = read_value<double>(in, "tap");
  return Bank(std::move(t));
}

}  // namespace

std::string format_graph(const Graph& g) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << g.n << ' ' << g.k_neighbors << ' ' << g.seed << '\n';
  for (int i = 0; i < g.n; ++i) out << g.positions(i, 0) << ' ' << g.positions(i, 1) << '\n';
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (g.weights(i, j) != 0.0) out << i << ' ' << j << ' ' << g.weights(i, j) << '\n';
  return out.str();
}

Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  Graph g;
  g.n = read_value<int>(in, "node count");
  g.k_neighbors = read_value<int>(in, "neighbor count");
  g.seed = read_value<std::uint64_t>(in, "seed");
  if (g.n <= 0) throw IoError("graph header must have positive n");
  g.positions.resize(g.n, 2);
  for (int i = 0; i < g.n; ++i) {
    g.positions(i, 0) = read_value<double>(in, "x coordinate");
    g.positions(i, 1) = read_value<double>(in, "y coordinate");
  }
  g.weights = Matrix::Zero(g.n, g.n);
  int i = 0, j = 0;
  double w = 0;
  while (in >> i >> j >> w) {
    if (i < 0 || j < 0 || i >= g.n || j >= g.n || i == j) throw IoError("edge index out of range");
    g.weights(i, j) = w;
    g.weights(j, i) = w;
  }
  if (!in.eof()) throw IoError("malformed edge line");
  return g;
}

void write_graph(const Graph& g, const std::string& path) { dump(format_graph(g), path); }
Graph read_graph(const std::string& path) { return parse_graph(slurp(path)); }

std::string format_bank(const Bank& b) {
  std::ostringstream out;
  out << std::setprecision(17);
  write_bank_body(out, b);
  return out.str();
}

Bank parse_bank(const std::string& text) {
  std::istringstream in(text);
  return read_bank_body(in);
}

void write_bank(const Bank& b, const std::string& path) { dump(format_bank(b), path); }
Bank read_bank(const std::string& path) { return parse_bank(slurp(path)); }

std::string format_sigma(const Sigma& s) {
  std::ostringstream out;
  out << std::setprecision(17);
  switch (s.kind()) {
    case SigmaKind::tanh: out << "tanh"; break;
    case SigmaKind::identity: out << "identity"; break;
    case SigmaKind::leaky_rectifier: out << "leaky_rectifier " << s.slope(); break;
  }
  return out.str();
}

Sigma parse_sigma(const std::string& line) {
  std::istringstream in(line);
  std::string name;
  in >> name;
  if (name == "tanh") return Sigma::tanh();
  if (name == "identity") return Sigma::identity();
  if (name == "leaky_rectifier") return Sigma::leaky_rectifier(read_value<double>(in, "leaky slope"));
  throw IoError("unknown nonlinearity '" + name + "'");
}

std::string format_model(const ModelFile& m) {
  detail::require_same_size(m.bank.num_filters(), m.readout.weights.size(), "format_model readout");
  std::ostringstream out;
  out << std::setprecision(17);
  write_bank_body(out, m.bank);
  for (Eigen::Index f = 0; f < m.readout.weights.size(); ++f) out << (f ? " " : "") << m.readout.weights(f);
  out << '\n' << format_sigma(m.sigma) << '\n';
  return out.str();
}

ModelFile parse_model(const std::string& text) {
  std::istringstream in(text);
  ModelFile m;
  m.bank = read_bank_body(in);
  Vector w(m.bank.num_filters());
  for (int f = 0; f < m.bank.num_filters(); ++f) w(f) = read_value<double>(in, "readout weight");
  m.readout = Readout<double>(std::move(w));
  std::string line;
  std::getline(in, line);  // rest of the readout line
  if (!std::getline(in, line)) throw IoError("model file is missing the nonlinearity line");
  m.sigma = parse_sigma(line);
  return m;
}

void write_model(const ModelFile& m, const std::string& path) { dump(format_model(m), path); }
ModelFile read_model(const std::string& path) { return parse_model(slurp(path)); }

}  // namespace gdisc
