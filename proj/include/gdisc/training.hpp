#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gdisc/filtering.hpp"
#include "gdisc/gnn.hpp"
#include "gdisc/graph.hpp"

namespace gdisc {

/// Filter bank plus single-tap readout. With use_nonlinearity false the model is the
/// linear bank; otherwise it is the single-layer GNN with `sigma`.
struct TrainableModel {
  Matrix taps;     // F x (K+1)
  Vector readout;  // F
  Sigma sigma = Sigma::tanh();
  bool use_nonlinearity = true;

  int num_filters() const { return static_cast<int>(taps.rows()); }
  int num_taps() const { return static_cast<int>(taps.cols()); }
  Sigma active_sigma() const { return use_nonlinearity ? sigma : Sigma::identity(); }
  Eigen::Index num_params() const { return taps.size() + readout.size(); }

  /// Taps (row-major) followed by readout weights.
  Vector params() const;
  void set_params(const Vector& p);
  ModelFile to_file() const;
};

TrainableModel from_model_file(const ModelFile& m, bool use_nonlinearity);

/// Taps and readout i.i.d. uniform on +-1/sqrt(F (K+1)).
TrainableModel init_model(int num_filters, int num_taps, const Sigma& sigma, bool use_nonlinearity,
                          std::mt19937_64& rng);

/// Column j of inputs/targets is sample j.
struct Dataset {
  Matrix inputs;
  Matrix targets;

  Eigen::Index size() const { return inputs.cols(); }
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 100;
  double learning_rate = 1e-3;
  double decay = 0.9;
  double il_weight = 0.01;
  std::uint64_t seed = 0;
  double lam_max = 1.0;  // frequency range of the integral Lipschitz penalty
};

struct LossAndGrad {
  double value = 0;
  Matrix grad;
};

/// Mean over all entries of (pred - target)^2 and its gradient with respect to pred.
LossAndGrad mse_loss(const Matrix& pred, const Matrix& target);

/// weight * max_{f, grid} |lambda h_f'(lambda)| and a subgradient with respect to the taps
/// (all mass on the first maximiser).
LossAndGrad il_regularizer(const Matrix& taps, double lam_max, double weight);

struct ModelGradients {
  double loss = 0;  // mse + regularizer
  double mse = 0;
  double regularizer = 0;
  Matrix taps;
  Vector readout;

  Vector flat() const;
};

Matrix model_forward(const TrainableModel& model, const Support& s, const Matrix& inputs);

ModelGradients model_backward(const TrainableModel& model, const Support& s, const Matrix& inputs,
                              const Matrix& targets, const TrainConfig& config);

double evaluate_mse(const TrainableModel& model, const Support& s, const Dataset& data);

struct AdamState {
  Vector m;
  Vector v;
  long t = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double per_epoch_decay = 0.9;

  static AdamState for_params(Eigen::Index size, double learning_rate, double decay);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Vector& params, const Vector& grads);

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double il_constant = 0;
  double learning_rate = 0;
};

struct TrainResult {
  TrainableModel model;  // parameters with the lowest validation loss
  int best_epoch = 0;
  std::vector<HistoryRow> history;  // row 0 is the untrained model
};

TrainResult train(TrainableModel model, const Support& s, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config);

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path);

/// Largest mismatch between analytic and central-difference gradients over all coordinates,
/// measured as |a - n| / max(1e-4 * max(|a|, |n|), 1e-6); values <= 1 pass.
struct GradCheckResult {
  double worst_ratio = 0;
  double worst_relative = 0;
  Eigen::Index worst_index = -1;
  Eigen::Index coordinates = 0;
};

GradCheckResult check_gradients(const TrainableModel& model, const Support& s, const Matrix& inputs,
                                const Matrix& targets, const TrainConfig& config, double step = 1e-5);

/// Gap between the largest and second-largest |lambda h'(lambda)| over the bank and grid.
double il_argmax_gap(const Matrix& taps, double lam_max);

}  // namespace gdisc
