#include "gdisc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "gdisc/discriminability.hpp"

namespace gdisc {
namespace {

constexpr const char* kFilterBankModel = "filter_bank";
constexpr const char* kGnnModel = "gnn";

int to_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  const long v = std::stol(value, &used);
  if (used != value.size()) throw InvalidConfiguration("setting '" + key + "' is not an integer: " + value);
  return static_cast<int>(v);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  const double v = std::stod(value, &used);
  if (used != value.size()) throw InvalidConfiguration("setting '" + key + "' is not a number: " + value);
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ReplicateResult {
  std::vector<RunMetrics> runs;  // subspace-major, filter bank before gnn
};

ReplicateResult run_replicate(const ExperimentConfig& cfg, int g) {
  const std::uint64_t rep_seed = replicate_seed(cfg.seed, g);
  const Graph graph = cfg.fixed_graph ? *cfg.fixed_graph : generate_geometric_graph(cfg.n, cfg.neighbors, rep_seed);
  const Support s = normalize_support(laplacian(graph));
  const Spectrum<double> spec = eig_sym(s);
  const Split split = split_subspace(spec, cfg.k);

  TrainConfig tc = cfg.training;
  tc.lam_max = spec.eigenvalues.cwiseAbs().maxCoeff();

  ReplicateResult out;
  for (std::size_t si = 0; si < cfg.subspaces.size(); ++si) {
    const Subspace mode = cfg.subspaces[si];
    const auto stream = static_cast<std::uint64_t>(mode) + 1;
    auto data_rng = trial_rng(rep_seed, stream);
    const DatasetBundle data = build_dataset(s, split, mode, {cfg.train, cfg.val, cfg.test}, data_rng);

    auto init_rng = trial_rng(rep_seed, 100 + stream);
    TrainableModel gnn = init_model(cfg.features, cfg.taps, Sigma::tanh(), true, init_rng);
    if (cfg.initial_model) {
      gnn.taps = cfg.initial_model->bank.taps;
      gnn.readout = cfg.initial_model->readout.weights;
    }
    TrainableModel linear = gnn;
    linear.use_nonlinearity = false;
    tc.seed = trial_rng(rep_seed, 200 + stream)();

    for (const TrainableModel* m : {&linear, &gnn}) {
      const auto start = std::chrono::steady_clock::now();
      TrainResult tr = train(*m, s, data.train, data.val, tc);
      RunMetrics rm;
      rm.graph_index = g;
      rm.subspace = mode;
      rm.model = m->use_nonlinearity ? kGnnModel : kFilterBankModel;
      rm.test_mse = evaluate_mse(tr.model, s, data.test);
      rm.il_constant = bank_il_constant(Bank(tr.model.taps), tc.lam_max);
      rm.best_epoch = tr.best_epoch;
      rm.history = std::move(tr.history);
      rm.trained = tr.model.to_file();
      rm.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      out.runs.push_back(std::move(rm));
    }
  }
  return out;
}

}  // namespace

std::string to_string(Subspace s) {
  switch (s) {
    case Subspace::low: return "low";
    case Subspace::high: return "high";
    case Subspace::full: return "full";
  }
  return "full";
}

Subspace parse_subspace(const std::string& name) {
  if (name == "low") return Subspace::low;
  if (name == "high") return Subspace::high;
  if (name == "full") return Subspace::full;
  throw InvalidConfiguration("unknown subspace '" + name + "' (expected low, high or full)");
}

void ExperimentConfig::validate() const {
  if (n <= 0 || k <= 0 || k >= n) throw InvalidConfiguration("experiment: need 0 < k < n");
  if (neighbors <= 0 || neighbors >= n) throw InvalidConfiguration("experiment: need 0 < neighbors < n");
  if (features <= 0 || taps <= 0) throw InvalidConfiguration("experiment: features and taps must be positive");
  if (train <= 0 || val <= 0 || test <= 0 || graphs <= 0)
    throw InvalidConfiguration("experiment: sample and graph counts must be positive");
  if (subspaces.empty()) throw InvalidConfiguration("experiment: no subspace selected");
  if (training.epochs < 0 || training.batch_size <= 0) throw InvalidConfiguration("experiment: bad epochs/batch");
  if (training.il_weight < 0 || training.learning_rate <= 0 || training.decay <= 0)
    throw InvalidConfiguration("experiment: weights and rates must be nonnegative");
  if (fixed_graph && fixed_graph->n != n) throw InvalidConfiguration("experiment: loaded graph size differs from n");
  if (initial_model && (initial_model->bank.num_filters() != features || initial_model->bank.num_taps() != taps))
    throw InvalidConfiguration("experiment: loaded model shape differs from features/taps");
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "paper") return cfg;
  if (name == "desk") {
    cfg.graphs = 10;
    cfg.train = 2000;
    cfg.val = 200;
    cfg.test = 200;
    cfg.training.epochs = 20;
    return cfg;
  }
  throw InvalidConfiguration("unknown preset '" + name + "' (expected paper or desk)");
}

void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings) {
  for (const auto& [key, value] : settings) {
    if (key == "preset") continue;  // resolved by the caller before other settings
    if (key == "subspace") {
      cfg.subspaces = value == "all" ? std::vector<Subspace>{Subspace::low, Subspace::high, Subspace::full}
                                     : std::vector<Subspace>{parse_subspace(value)};
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "graphs") {
      cfg.graphs = to_int(key, value);
    } else if (key == "epochs") {
      cfg.training.epochs = to_int(key, value);
    } else if (key == "batch-size") {
      cfg.training.batch_size = to_int(key, value);
    } else if (key == "il-weight") {
      cfg.training.il_weight = to_double(key, value);
    } else if (key == "learning-rate") {
      cfg.training.learning_rate = to_double(key, value);
    } else if (key == "decay") {
      cfg.training.decay = to_double(key, value);
    } else if (key == "n") {
      cfg.n = to_int(key, value);
    } else if (key == "k") {
      cfg.k = to_int(key, value);
    } else if (key == "neighbors") {
      cfg.neighbors = to_int(key, value);
    } else if (key == "features") {
      cfg.features = to_int(key, value);
    } else if (key == "taps") {
      cfg.taps = to_int(key, value);
    } else if (key == "train") {
      cfg.train = to_int(key, value);
    } else if (key == "val") {
      cfg.val = to_int(key, value);
    } else if (key == "test") {
      cfg.test = to_int(key, value);
    } else {
      throw InvalidConfiguration("unknown setting '" + key + "'");
    }
  }
}

std::map<std::string, std::string> read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path + ":" + std::to_string(lineno) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

Vector generate_input(const Split& split, Subspace mode, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0;; ++attempt) {
    Vector w(split.n());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
    try {
      switch (mode) {
        case Subspace::high: return project_subspace(split, w, Band::high, true);
        case Subspace::low: return project_subspace(split, w, Band::low, true);
        case Subspace::full: {
          const double norm = w.norm();
          if (norm < 1e-12) throw DegenerateProjection("generate_input: zero Gaussian draw");
          return w / norm;
        }
      }
    } catch (const DegenerateProjection&) {
      if (attempt == 1) throw;
    }
  }
}

Vector generate_target(const Support& s_norm, const Vector& x, const std::array<double, 3>& c) {
  detail::require_same_size(s_norm.n(), x.size(), "generate_target");
  const Vector z = apply_fir(Fir{c[0], c[1], c[2]}, s_norm, x);
  return z.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

DatasetBundle build_dataset(const Support& s_norm, const Split& split, Subspace mode, DatasetCounts counts,
                            std::mt19937_64& rng) {
  DatasetBundle out;
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  for (double& c : out.coefficients) c = coeff(rng);

  auto fill = [&](int count) {
    Dataset d;
    d.inputs.resize(split.n(), count);
    d.targets.resize(split.n(), count);
    for (int j = 0; j < count; ++j) {
      d.inputs.col(j) = generate_input(split, mode, rng);
      d.targets.col(j) = generate_target(s_norm, d.inputs.col(j), out.coefficients);
    }
    return d;
  };
  out.train = fill(counts.train);
  out.val = fill(counts.val);
  out.test = fill(counts.test);
  return out;
}

std::pair<double, double> mean_and_ci95(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double g = static_cast<double>(values.size());
  double mean = 0;
  for (double v : values) mean += v;
  mean /= g;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (g - 1.0));
  return {mean, 1.96 * sd / std::sqrt(g)};
}

std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
  return master ^ static_cast<std::uint64_t>(replicate);
}

const AggregateRow* AggregateReport::find(Subspace s, const std::string& model) const {
  for (const auto& r : rows)
    if (r.subspace == s && r.model == model) return &r;
  return nullptr;
}

double AggregateReport::relative_gap(Subspace s) const {
  const AggregateRow* f = find(s, kFilterBankModel);
  const AggregateRow* g = find(s, kGnnModel);
  if (!f || !g) throw InvalidInput("relative_gap: subspace " + to_string(s) + " not in report");
  return f->mean_error / g->mean_error - 1.0;
}

std::vector<double> AggregateReport::per_graph_ratios(Subspace s) const {
  const AggregateRow* f = find(s, kFilterBankModel);
  const AggregateRow* g = find(s, kGnnModel);
  if (!f || !g) throw InvalidInput("per_graph_ratios: subspace " + to_string(s) + " not in report");
  std::vector<double> out(f->per_graph.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f->per_graph[i] / g->per_graph[i];
  return out;
}

AggregateReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<ReplicateResult> results(static_cast<std::size_t>(config.graphs));
  std::vector<std::exception_ptr> errors(results.size());

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int g = next++; g < config.graphs; g = next++) {
      try {
        results[g] = run_replicate(config, g);
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(config.graphs)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t g = 0; g < errors.size(); ++g) {
    if (!errors[g]) continue;
    try {
      std::rethrow_exception(errors[g]);
    } catch (const std::exception& e) {
      throw std::runtime_error("replicate " + std::to_string(g) + " failed: " + e.what());
    }
  }

  AggregateReport report;
  for (auto& r : results)
    for (auto& m : r.runs) report.runs.push_back(std::move(m));

  for (Subspace s : config.subspaces) {
    for (const char* model : {kFilterBankModel, kGnnModel}) {
      AggregateRow row;
      row.subspace = s;
      row.model = model;
      for (const auto& m : report.runs)
        if (m.subspace == s && m.model == model) row.per_graph.push_back(m.test_mse);
      std::tie(row.mean_error, row.ci_halfwidth) = mean_and_ci95(row.per_graph);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string format_summary_csv(const AggregateReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "subspace,model,mean_error,ci_halfwidth,n_graphs\n";
  for (const auto& r : report.rows)
    out << to_string(r.subspace) << ',' << r.model << ',' << r.mean_error << ',' << r.ci_halfwidth << ','
        << r.per_graph.size() << '\n';
  return out.str();
}

void emit_report(const AggregateReport& report, const std::string& out_dir, std::ostream& table) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

  auto open = [&](const std::string& name) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    return f;
  };
  {
    auto f = open("summary.csv");
    f << format_summary_csv(report);
    if (!f) throw IoError("write to summary.csv failed");
  }
  {
    auto f = open("runs.csv");
    f << std::setprecision(17);
    f << "graph,subspace,model,test_mse,il_constant,best_epoch,wall_seconds\n";
    for (const auto& m : report.runs)
      f << m.graph_index << ',' << to_string(m.subspace) << ',' << m.model << ',' << m.test_mse << ','
        << m.il_constant << ',' << m.best_epoch << ',' << m.wall_seconds << '\n';
    if (!f) throw IoError("write to runs.csv failed");
  }

  table << std::left << std::setw(10) << "subspace" << std::setw(13) << "model" << std::right << std::setw(12)
        << "mean_mse" << std::setw(12) << "ci95" << std::setw(8) << "graphs" << '\n';
  table << std::fixed << std::setprecision(5);
  for (const auto& r : report.rows)
    table << std::left << std::setw(10) << to_string(r.subspace) << std::setw(13) << r.model << std::right
          << std::setw(12) << r.mean_error << std::setw(12) << r.ci_halfwidth << std::setw(8) << r.per_graph.size()
          << '\n';
  table.unsetf(std::ios::floatfield);
}

}  // namespace gdisc
