#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gdisc/gnn.hpp"
#include "gdisc/graph.hpp"
#include "gdisc/spectral.hpp"
#include "gdisc/training.hpp"

namespace gdisc {

enum class Subspace { low, high, full };

std::string to_string(Subspace s);
Subspace parse_subspace(const std::string& name);

struct ExperimentConfig {
  int n = 50;
  int k = 10;
  int neighbors = 5;
  int features = 32;
  int taps = 3;
  std::vector<Subspace> subspaces{Subspace::low, Subspace::high, Subspace::full};
  int train = 8000;
  int val = 200;
  int test = 200;
  int graphs = 30;
  TrainConfig training;
  std::uint64_t seed = 0;
  /// Graph used for every replicate instead of a freshly generated one.
  std::optional<Graph> fixed_graph;
  /// Initial parameters for both models instead of random initialisation.
  std::optional<ModelFile> initial_model;

  void validate() const;
};

/// Values named "paper" (full scale) and "desk" (reduced counts, same statistics).
ExperimentConfig preset_config(const std::string& name);

/// Applies "key = value" settings; '#' starts a comment. Keys match the CLI flag names.
void apply_settings(ExperimentConfig& cfg, const std::map<std::string, std::string>& settings);
std::map<std::string, std::string> read_settings_file(const std::string& path);

/// Unit-norm Gaussian signal, projected onto the requested band unless mode is full.
Vector generate_input(const Split& split, Subspace mode, std::mt19937_64& rng);

/// sign(c0 x + c1 S x + c2 S^2 x) with sign(0) = +1.
Vector generate_target(const Support& s_norm, const Vector& x, const std::array<double, 3>& c);

struct DatasetBundle {
  Dataset train;
  Dataset val;
  Dataset test;
  std::array<double, 3> coefficients{};
};

struct DatasetCounts {
  int train = 0;
  int val = 0;
  int test = 0;
};

/// Coefficients are drawn once from U[-1, 1], then inputs i.i.d. per sample.
DatasetBundle build_dataset(const Support& s_norm, const Split& split, Subspace mode, DatasetCounts counts,
                            std::mt19937_64& rng);

struct RunMetrics {
  int graph_index = 0;
  Subspace subspace = Subspace::full;
  std::string model;  // "filter_bank" or "gnn"
  double test_mse = 0;
  double il_constant = 0;
  int best_epoch = 0;
  double wall_seconds = 0;
  std::vector<HistoryRow> history;
  ModelFile trained;
};

struct AggregateRow {
  Subspace subspace = Subspace::full;
  std::string model;
  double mean_error = 0;
  double ci_halfwidth = 0;
  std::vector<double> per_graph;
};

struct AggregateReport {
  std::vector<AggregateRow> rows;  // ordered by subspace, then filter_bank before gnn
  std::vector<RunMetrics> runs;

  const AggregateRow* find(Subspace s, const std::string& model) const;
  /// mean filter-bank error / mean GNN error - 1.
  double relative_gap(Subspace s) const;
  /// Per-graph filter-bank error / GNN error.
  std::vector<double> per_graph_ratios(Subspace s) const;
};

/// Mean and 1.96 * sample sd / sqrt(G).
std::pair<double, double> mean_and_ci95(const std::vector<double>& values);

std::uint64_t replicate_seed(std::uint64_t master, int replicate);

AggregateReport run_experiment(const ExperimentConfig& config);

/// Writes summary.csv and runs.csv to `out_dir` and prints a table to `table`.
void emit_report(const AggregateReport& report, const std::string& out_dir, std::ostream& table);

std::string format_summary_csv(const AggregateReport& report);

}  // namespace gdisc
