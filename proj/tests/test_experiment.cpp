#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gdisc/discriminability.hpp"
#include "gdisc/experiment.hpp"
#include "oracles.hpp"

using namespace gdisc;
namespace fs = std::filesystem;

namespace {

struct Setup {
  Support s;
  Spectrum<double> spec;
  Split split;
};

Setup make_setup(int n, int k, std::uint64_t seed) {
  Support s = normalize_support(laplacian(generate_geometric_graph(n, 5, seed)));
  auto spec = eig_sym(s);
  auto split = split_subspace(spec, k);
  return {std::move(s), std::move(spec), std::move(split)};
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.n = 12;
  cfg.k = 3;
  cfg.neighbors = 3;
  cfg.features = 3;
  cfg.train = 40;
  cfg.val = 10;
  cfg.test = 10;
  cfg.graphs = 3;
  cfg.training.epochs = 2;
  cfg.training.batch_size = 10;
  cfg.seed = 5;
  return cfg;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("generate_input") {
  const auto st = make_setup(30, 6, 1);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Vector high = generate_input(st.split, Subspace::high, rng);
    CHECK(in_nul_vk(st.split, high).member);
    CHECK(std::abs(high.norm() - 1.0) <= 1e-12);
    const Vector low = generate_input(st.split, Subspace::low, rng);
    CHECK((st.split.v_high.transpose() * low).norm() <= 1e-10);
    CHECK(std::abs(low.norm() - 1.0) <= 1e-12);
    const Vector full = generate_input(st.split, Subspace::full, rng);
    CHECK(std::abs(full.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("generate_target") {
  const auto st = make_setup(20, 4, 3);
  std::mt19937_64 rng(4);
  Vector x = oracle::random_vector(20, rng);
  x(3) = 0.0;
  const Vector plus = generate_target(st.s, x, {1.0, 0.0, 0.0});
  const Vector minus = generate_target(st.s, x, {-1.0, 0.0, 0.0});
  for (int i = 0; i < 20; ++i) {
    const double expected = x(i) >= 0 ? 1.0 : -1.0;
    CHECK(plus(i) == expected);
  }
  CHECK(plus(3) == 1.0);
  // -0.0 compares equal to zero, so sign(0) = +1 also holds after negation
  CHECK(minus(3) == 1.0);
  for (int i = 0; i < 20; ++i)
    if (i != 3) CHECK(minus(i) == -plus(i));

  const Vector vn = st.spec.eigenvectors.col(19);
  const Vector t = generate_target(st.s, vn, {0.0, 1.0, 0.0});
  for (int i = 0; i < 20; ++i)
    if (std::abs(vn(i)) > 1e-9) CHECK(t(i) == (vn(i) > 0 ? 1.0 : -1.0));
  CHECK_THROWS_AS(generate_target(st.s, Vector::Ones(3), {1.0, 0.0, 0.0}), ShapeError);
}

TEST_CASE("build_dataset") {
  const auto st = make_setup(20, 4, 5);
  std::mt19937_64 a(6), b(6);
  const auto d1 = build_dataset(st.s, st.split, Subspace::high, {80, 20, 20}, a);
  const auto d2 = build_dataset(st.s, st.split, Subspace::high, {80, 20, 20}, b);
  CHECK(d1.train.size() == 80);
  CHECK(d1.val.size() == 20);
  CHECK(d1.test.size() == 20);
  CHECK(d1.train.inputs == d2.train.inputs);
  CHECK(d1.test.targets == d2.test.targets);
  CHECK(d1.coefficients == d2.coefficients);
  for (double c : d1.coefficients) CHECK(std::abs(c) <= 1.0);
  for (const Dataset* d : {&d1.train, &d1.val, &d1.test}) CHECK((d->targets.array().abs() == 1.0).all());
  for (Eigen::Index j = 0; j < d1.train.size(); ++j) {
    const Vector x = d1.train.inputs.col(j);
    CHECK(d1.train.targets.col(j) == generate_target(st.s, x, d1.coefficients));
  }
  CHECK(d1.train.inputs.col(0) != d1.val.inputs.col(0));
}

TEST_CASE("mean_and_ci95") {
  const auto [m, h] = mean_and_ci95({1.0, 2.0, 3.0, 4.0});
  CHECK(m == 2.5);
  CHECK(h == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-15));
  CHECK(mean_and_ci95({}).first == 0.0);
  CHECK(mean_and_ci95({7.0}).second == 0.0);
  CHECK(replicate_seed(12, 5) == (12u ^ 5u));
}

TEST_CASE("settings: presets, key-value files and validation") {
  const ExperimentConfig paper = preset_config("paper");
  CHECK(paper.n == 50);
  CHECK(paper.k == 10);
  CHECK(paper.features == 32);
  CHECK(paper.taps == 3);
  CHECK(paper.train == 8000);
  CHECK(paper.graphs == 30);
  CHECK(paper.training.learning_rate == 1e-3);
  CHECK(paper.training.il_weight == 0.01);
  const ExperimentConfig desk = preset_config("desk");
  CHECK(desk.graphs == 10);
  CHECK(desk.train == 2000);
  CHECK(desk.val == 200);
  CHECK(desk.test == 200);
  CHECK(desk.training.epochs == 20);
  CHECK_THROWS_AS(preset_config("huge"), InvalidConfiguration);

  const auto path = fs::temp_directory_path() / "gdisc_settings_test.txt";
  {
    std::ofstream out(path);
    out << "# desk run on two graphs\n\ngraphs = 2\nsubspace = high  # only the high band\nil-weight=0.5\n";
  }
  ExperimentConfig cfg = preset_config("desk");
  apply_settings(cfg, read_settings_file(path.string()));
  CHECK(cfg.graphs == 2);
  CHECK(cfg.subspaces == std::vector<Subspace>{Subspace::high});
  CHECK(cfg.training.il_weight == 0.5);
  fs::remove(path);

  CHECK_THROWS_AS(apply_settings(cfg, {{"colour", "blue"}}), InvalidConfiguration);
  CHECK_THROWS_AS(apply_settings(cfg, {{"graphs", "2x"}}), InvalidConfiguration);
  CHECK_THROWS_AS(read_settings_file("/nonexistent/settings.txt"), IoError);
  ExperimentConfig bad = tiny_config();
  bad.k = bad.n;
  CHECK_THROWS_AS(bad.validate(), InvalidConfiguration);
  CHECK_THROWS_AS(parse_subspace("middle"), InvalidConfiguration);
}

TEST_CASE("pipeline smoke: one graph, zero epochs") {
  ExperimentConfig cfg = tiny_config();
  cfg.graphs = 1;
  cfg.training.epochs = 0;
  cfg.subspaces = {Subspace::high};
  const AggregateReport r = run_experiment(cfg);
  REQUIRE(r.runs.size() == 2);
  CHECK(r.runs[0].model == "filter_bank");
  CHECK(r.runs[1].model == "gnn");
  for (const auto& m : r.runs) {
    CHECK(m.best_epoch == 0);
    CHECK(m.history.size() == 1);
    CHECK(m.test_mse >= 0);
  }
}

TEST_CASE("run_experiment is deterministic and aggregates per-graph values") {
  const ExperimentConfig cfg = tiny_config();
  const AggregateReport a = run_experiment(cfg);
  const AggregateReport b = run_experiment(cfg);
  CHECK(format_summary_csv(a) == format_summary_csv(b));
  REQUIRE(a.rows.size() == 6);
  for (const auto& row : a.rows) {
    CHECK(row.per_graph.size() == 3u);
    double sum = 0;
    for (double v : row.per_graph) sum += v;
    CHECK(std::abs(sum / 3.0 - row.mean_error) <= 1e-12);
    CHECK(row.ci_halfwidth >= 0);
  }
  for (Subspace s : {Subspace::low, Subspace::high, Subspace::full}) {
    const double gap = a.relative_gap(s);
    CHECK(gap == a.find(s, "filter_bank")->mean_error / a.find(s, "gnn")->mean_error - 1.0);
    CHECK(a.per_graph_ratios(s).size() == 3u);
  }
}

TEST_CASE("emit_report writes documented CSVs that round-trip") {
  const AggregateReport r = run_experiment(tiny_config());
  const fs::path dir = fs::temp_directory_path() / "gdisc_report_test";
  fs::remove_all(dir);
  std::ostringstream table;
  emit_report(r, dir.string(), table);
  const auto summary = read_csv(dir / "summary.csv");
  REQUIRE(summary.size() == 7);
  CHECK(summary[0] == std::vector<std::string>{"subspace", "model", "mean_error", "ci_halfwidth", "n_graphs"});
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(summary[i + 1][0] == to_string(r.rows[i].subspace));
    CHECK(summary[i + 1][1] == r.rows[i].model);
    CHECK(std::stod(summary[i + 1][2]) == r.rows[i].mean_error);
    CHECK(std::stod(summary[i + 1][3]) == r.rows[i].ci_halfwidth);
    CHECK(summary[i + 1][4] == "3");
  }
  const auto runs = read_csv(dir / "runs.csv");
  CHECK(runs[0] == std::vector<std::string>{"graph", "subspace", "model", "test_mse", "il_constant", "best_epoch",
                                            "wall_seconds"});
  CHECK(runs.size() == r.runs.size() + 1);
  CHECK(table.str().find("filter_bank") != std::string::npos);

  const fs::path empty = fs::temp_directory_path() / "gdisc_report_empty";
  fs::remove_all(empty);
  emit_report(AggregateReport{}, empty.string(), table);
  CHECK(read_csv(empty / "summary.csv").size() == 1);
  CHECK(read_csv(empty / "runs.csv").size() == 1);
  fs::remove_all(dir);
  fs::remove_all(empty);

  CHECK_THROWS_AS(emit_report(r, "/proc/forbidden/out", table), IoError);
}

TEST_CASE("high-band inputs are nondiscriminable from the zero signal") {
  const auto st = make_setup(50, 10, 8);
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const Vector x = generate_input(st.split, Subspace::high, rng);
    CHECK(in_nul_vk(st.split, x).member);
  }
}

TEST_CASE("fixed graph and initial model are honoured") {
  ExperimentConfig cfg = tiny_config();
  cfg.graphs = 2;
  cfg.training.epochs = 0;
  cfg.fixed_graph = generate_geometric_graph(cfg.n, cfg.neighbors, 99);
  std::mt19937_64 rng(10);
  const TrainableModel init = init_model(cfg.features, cfg.taps, Sigma::tanh(), true, rng);
  cfg.initial_model = init.to_file();
  const AggregateReport r = run_experiment(cfg);
  for (const auto& m : r.runs) CHECK(m.trained.bank.taps == init.taps);
  cfg.fixed_graph = generate_geometric_graph(cfg.n + 1, cfg.neighbors, 99);
  CHECK_THROWS_AS(run_experiment(cfg), InvalidConfiguration);
}

}
