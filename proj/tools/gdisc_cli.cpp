// Command-line front end: run the regression experiment, verify the discriminability
// results on random graphs, or check training gradients.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>

#include "gdisc/discriminability.hpp"
#include "gdisc/experiment.hpp"
#include "gdisc/graph.hpp"
#include "gdisc/training.hpp"

namespace fs = std::filesystem;
using namespace gdisc;

namespace {

struct RunOptions {
  std::string preset = "desk";
  std::string subspace = "all";
  std::uint64_t seed = 0;
  std::string out = "results";
  int graphs = 0;
  int epochs = 0;
  int batch_size = 0;
  double il_weight = 0;
  std::string config;
  std::string dump_graph, load_graph, save_bank, load_bank, save_model, load_model;
};

struct VerifyOptions {
  std::string theorem = "all";
  int trials = 100;
  std::uint64_t seed = 0;
  int graphs = 10;
  int n = 20;
  int k = 4;
  int neighbors = 5;
  int features = 4;
  std::string out = "verify";
};

struct GradcheckOptions {
  int trials = 20;
  std::uint64_t seed = 0;
};

int do_run(const RunOptions& o, const CLI::App& cmd) {
  std::map<std::string, std::string> settings;
  if (!o.config.empty()) settings = read_settings_file(o.config);
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };

  std::string preset = o.preset;
  if (!given("--preset") && settings.count("preset")) preset = settings.at("preset");
  ExperimentConfig cfg = preset_config(preset);
  if (given("--subspace")) settings["subspace"] = o.subspace;
  if (given("--seed")) settings["seed"] = std::to_string(o.seed);
  if (given("--graphs")) settings["graphs"] = std::to_string(o.graphs);
  if (given("--epochs")) settings["epochs"] = std::to_string(o.epochs);
  if (given("--batch-size")) settings["batch-size"] = std::to_string(o.batch_size);
  if (given("--il-weight")) {
    std::ostringstream w;
    w << std::setprecision(17) << o.il_weight;
    settings["il-weight"] = w.str();
  }
  apply_settings(cfg, settings);

  if (!o.load_graph.empty()) {
    cfg.fixed_graph = read_graph(o.load_graph);
    cfg.n = cfg.fixed_graph->n;
  }
  if (!o.load_model.empty()) cfg.initial_model = read_model(o.load_model);
  if (!o.load_bank.empty()) {
    const Bank bank = read_bank(o.load_bank);
    ModelFile init = cfg.initial_model.value_or(ModelFile{bank, Readout<double>(Vector::Zero(bank.num_filters())),
                                                          Sigma::tanh()});
    if (!cfg.initial_model) {
      // readout starts from the usual random draw when only a bank is given
      std::mt19937_64 rng(cfg.seed);
      init.readout = Readout<double>(init_model(bank.num_filters(), bank.num_taps(), Sigma::tanh(), true, rng).readout);
    }
    init.bank = bank;
    cfg.initial_model = init;
    cfg.features = bank.num_filters();
    cfg.taps = bank.num_taps();
  }

  std::cout << "running " << cfg.graphs << " graph(s), n=" << cfg.n << " k=" << cfg.k << " F=" << cfg.features
            << " taps=" << cfg.taps << " train=" << cfg.train << " epochs=" << cfg.training.epochs
            << " batch=" << cfg.training.batch_size << " seed=" << cfg.seed << '\n';
  const AggregateReport report = run_experiment(cfg);
  emit_report(report, o.out, std::cout);

  const fs::path hist_dir = fs::path(o.out) / "histories";
  fs::create_directories(hist_dir);
  for (const auto& m : report.runs) {
    const std::string stem = to_string(m.subspace) + "_g" + std::to_string(m.graph_index) + "_" + m.model;
    write_history_csv(m.history, (hist_dir / ("history_" + stem + ".csv")).string());
    if (!o.save_model.empty()) {
      fs::create_directories(o.save_model);
      write_model(m.trained, (fs::path(o.save_model) / ("model_" + stem + ".txt")).string());
    }
    if (!o.save_bank.empty()) {
      fs::create_directories(o.save_bank);
      write_bank(m.trained.bank, (fs::path(o.save_bank) / ("bank_" + stem + ".txt")).string());
    }
  }
  if (!o.dump_graph.empty()) {
    fs::create_directories(o.dump_graph);
    for (int g = 0; g < cfg.graphs; ++g) {
      const Graph graph =
          cfg.fixed_graph ? *cfg.fixed_graph : generate_geometric_graph(cfg.n, cfg.neighbors, replicate_seed(cfg.seed, g));
      write_graph(graph, (fs::path(o.dump_graph) / ("graph_g" + std::to_string(g) + ".txt")).string());
    }
  }

  for (Subspace s : cfg.subspaces) {
    std::cout << "relative gap (" << to_string(s) << "): " << std::fixed << std::setprecision(1)
              << 100.0 * report.relative_gap(s) << "%\n";
    std::cout.unsetf(std::ios::floatfield);
  }
  return 0;
}

struct VerifyGraph {
  Domain domain;
  Split split;
};

VerifyGraph make_verify_graph(const VerifyOptions& o, int g) {
  const Graph graph = generate_geometric_graph(o.n, o.neighbors, replicate_seed(o.seed, g));
  Domain d = make_domain(normalize_support(laplacian(graph)));
  Split split = split_subspace(d.spectrum, o.k);
  return {std::move(d), std::move(split)};
}

int do_verify(const VerifyOptions& o) {
  fs::create_directories(o.out);
  const bool all = o.theorem == "all";
  bool ok = true;
  auto csv = [&](const std::string& name) { return (fs::path(o.out) / name).string(); };
  auto verdict = [&](bool pass) {
    ok = ok && pass;
    return pass ? "PASS" : "FAIL";
  };

  if (all || o.theorem == "1") {
    int counter = 0, total = 0;
    std::vector<TrialRecord> log;
    for (int g = 0; g < o.graphs; ++g) {
      auto vg = make_verify_graph(o, g);
      auto rng = trial_rng(o.seed, 1000 + g);
      const Gnn gnn = make_verification_gnn(vg.domain.spectrum, o.k, o.features, HighBand::generic, Sigma::tanh(), rng);
      auto r = verify_theorem1(vg.domain, vg.split, gnn, o.trials, replicate_seed(o.seed, g));
      counter += r.counterexamples;
      total += r.trials;
      for (auto rec : r.log) {
        rec.trial += g * o.trials;
        log.push_back(rec);
      }
    }
    write_trial_csv(log, csv("theorem1.csv"));
    std::cout << "theorem 1: " << counter << " counterexamples in " << total << " pairs outside D_H  "
              << verdict(counter == 0) << '\n';
  }

  if (all || o.theorem == "2") {
    struct Regime {
      const char* name;
      Sigma sigma;
      PairSampler sampler;
    };
    const Regime regimes[] = {{"identity", Sigma::identity(), PairSampler::random_in_d_h},
                              {"leaky_positive", Sigma::leaky_rectifier(0.1), PairSampler::positive_regime},
                              {"tanh", Sigma::tanh(), PairSampler::random_in_d_h}};
    for (const auto& regime : regimes) {
      int agree = 0, total = 0, phi = 0;
      double worst_ratio = 0;
      std::vector<TrialRecord> log;
      for (int g = 0; g < o.graphs; ++g) {
        auto vg = make_verify_graph(o, g);
        auto rng = trial_rng(o.seed, 2000 + g);
        const Gnn gnn = make_verification_gnn(vg.domain.spectrum, o.k, o.features, HighBand::constant, regime.sigma, rng);
        auto r = verify_theorem2_forward(vg.domain, vg.split, gnn, o.trials, replicate_seed(o.seed, g), kMembershipTol,
                                         kSecantTol, regime.sampler);
        agree += r.agreements;
        total += r.trials;
        phi += r.in_d_phi;
        worst_ratio = std::max(worst_ratio, r.max_residual_ratio);
        for (auto rec : r.log) {
          rec.trial += g * o.trials;
          log.push_back(rec);
        }
      }
      write_trial_csv(log, csv(std::string("theorem2_") + regime.name + ".csv"));
      std::cout << "theorem 2 [" << regime.name << "]: biconditional held on " << agree << "/" << total
                << " pairs in D_H, " << phi << " nondiscriminable, max relative residual " << worst_ratio << "  "
                << verdict(agree == total) << '\n';
    }
  }

  if (all || o.theorem == "cor1") {
    int agree = 0, total = 0;
    std::vector<TrialRecord> log;
    for (int g = 0; g < o.graphs; ++g) {
      auto vg = make_verify_graph(o, g);
      auto rng = trial_rng(o.seed, 3000 + g);
      const Gnn gnn = make_verification_gnn(vg.domain.spectrum, o.k, o.features, HighBand::zero, Sigma::tanh(), rng);
      auto r = verify_corollary1(vg.domain, vg.split, gnn, o.trials, replicate_seed(o.seed, g));
      agree += r.agreements;
      total += r.trials;
      for (auto rec : r.log) {
        rec.trial += g * o.trials;
        log.push_back(rec);
      }
    }
    write_trial_csv(log, csv("corollary1.csv"));
    std::cout << "corollary 1: D_H and D_Phi verdicts agree on " << agree << "/" << total << "  "
              << verdict(agree == total) << '\n';
  }

  if (all || o.theorem == "cor2") {
    int graphs_with_witness = 0, violations = 0, probe_hits = 0, probe_total = 0;
    std::vector<TrialRecord> log;
    for (int g = 0; g < o.graphs; ++g) {
      auto vg = make_verify_graph(o, g);
      auto rng = trial_rng(o.seed, 4000 + g);
      const Gnn gnn = make_verification_gnn(vg.domain.spectrum, o.k, o.features, HighBand::generic, Sigma::tanh(), rng);
      auto r = verify_corollary2(vg.domain, vg.split, gnn, o.trials, replicate_seed(o.seed, g));
      graphs_with_witness += r.witness_found();
      violations += r.subset_violations;
      probe_hits += r.probe_above_threshold;
      probe_total += r.probe_draws;
      for (auto rec : r.log) {
        rec.trial += g * o.trials;
        log.push_back(rec);
      }
    }
    write_trial_csv(log, csv("corollary2.csv"));
    const double frac = probe_total ? double(probe_hits) / probe_total : 0.0;
    std::cout << "corollary 2: strictness witness on " << graphs_with_witness << "/" << o.graphs
              << " graphs, subset violations " << violations << ", probe residual > 1e-6 on " << probe_hits << "/"
              << probe_total << "  " << verdict(graphs_with_witness == o.graphs && violations == 0 && frac >= 0.95)
              << '\n';
  }
  return ok ? 0 : 1;
}

int do_gradcheck(const GradcheckOptions& o) {
  double worst = 0;
  int passed = 0;
  for (int t = 0; t < o.trials; ++t) {
    auto rng = trial_rng(o.seed, t);
    std::uniform_int_distribution<int> n_dist(4, 20), f_dist(1, 4), k_dist(1, 3), b_dist(1, 5);
    const int n = n_dist(rng), features = f_dist(rng), taps = k_dist(rng), batch = b_dist(rng);
    const Support s = normalize_support(laplacian(generate_geometric_graph(n, std::min(3, n - 1), rng())));
    TrainableModel m = init_model(features, taps, Sigma::tanh(), t % 2 == 0, rng);
    m.taps *= 3.0;  // move tanh out of its linear range
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Matrix x = Matrix::NullaryExpr(n, batch, [&] { return u(rng); });
    const Matrix y = Matrix::NullaryExpr(n, batch, [&] { return u(rng); });
    TrainConfig tc;
    tc.il_weight = 0.05;
    const auto r = check_gradients(m, s, x, y, tc);
    const bool pass = r.worst_ratio <= 1.0;
    passed += pass;
    worst = std::max(worst, r.worst_ratio);
    std::cout << "config " << t << ": n=" << n << " F=" << features << " taps=" << taps
              << (m.use_nonlinearity ? " tanh" : " linear") << " worst mismatch ratio " << r.worst_ratio << "  "
              << (pass ? "PASS" : "FAIL") << '\n';
  }
  std::cout << passed << "/" << o.trials << " configurations within tolerance (worst ratio " << worst << ")\n";
  return passed == o.trials ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph filter and single-layer GNN discriminability toolkit"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "train filter-bank and GNN models on synthetic graph regression");
  run_cmd->add_option("--preset", run.preset, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  run_cmd->add_option("--subspace", run.subspace, "low, high, full or all")
      ->check(CLI::IsMember({"low", "high", "full", "all"}));
  run_cmd->add_option("--seed", run.seed, "master seed");
  run_cmd->add_option("--out", run.out, "output directory");
  run_cmd->add_option("--graphs", run.graphs, "number of random graphs");
  run_cmd->add_option("--epochs", run.epochs, "training epochs");
  run_cmd->add_option("--batch-size", run.batch_size, "minibatch size");
  run_cmd->add_option("--il-weight", run.il_weight, "integral Lipschitz penalty weight");
  run_cmd->add_option("--config", run.config, "key = value settings file (flags take precedence)");
  run_cmd->add_option("--dump-graph", run.dump_graph, "directory to write each replicate's graph");
  run_cmd->add_option("--load-graph", run.load_graph, "graph file used for every replicate");
  run_cmd->add_option("--save-bank", run.save_bank, "directory to write trained filter banks");
  run_cmd->add_option("--load-bank", run.load_bank, "initial filter bank for both models");
  run_cmd->add_option("--save-model", run.save_model, "directory to write trained models");
  run_cmd->add_option("--load-model", run.load_model, "initial model (bank + readout) for both models");

  VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "randomised checks of the discriminability results");
  verify_cmd->add_option("--theorem", verify.theorem, "1, 2, cor1, cor2 or all")
      ->check(CLI::IsMember({"1", "2", "cor1", "cor2", "all"}));
  verify_cmd->add_option("--trials", verify.trials, "trials per graph");
  verify_cmd->add_option("--seed", verify.seed, "master seed");
  verify_cmd->add_option("--graphs", verify.graphs, "number of random graphs");
  verify_cmd->add_option("--out", verify.out, "directory for per-trial CSV files");

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with central differences");
  grad_cmd->add_option("--trials", grad.trials, "random configurations");
  grad_cmd->add_option("--seed", grad.seed, "master seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return do_run(run, *run_cmd);
    if (*verify_cmd) return do_verify(verify);
    if (*grad_cmd) return do_gradcheck(grad);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
