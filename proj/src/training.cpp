#include "gdisc/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace gdisc {
namespace {

/// shifted[k] = S^k X for k = 0..K.
std::vector<Matrix> shift_stack(const Support& s, const Matrix& inputs, int num_taps) {
  detail::require_same_size(s.n(), inputs.rows(), "model input rows");
  std::vector<Matrix> z(static_cast<std::size_t>(num_taps));
  z[0] = inputs;
  for (int k = 1; k < num_taps; ++k) z[k] = s.entries() * z[k - 1];
  return z;
}

Matrix pre_activation(const TrainableModel& model, const std::vector<Matrix>& z, int f) {
  Matrix p = model.taps(f, 0) * z[0];
  for (int k = 1; k < model.num_taps(); ++k) p += model.taps(f, k) * z[k];
  return p;
}

Matrix gather_columns(const Matrix& m, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t j = begin; j < end; ++j) out.col(static_cast<Eigen::Index>(j - begin)) = m.col(idx[j]);
  return out;
}

}  // namespace

Vector TrainableModel::params() const {
  Vector p(num_params());
  Eigen::Index at = 0;
  for (int f = 0; f < num_filters(); ++f)
    for (int k = 0; k < num_taps(); ++k) p(at++) = taps(f, k);
  p.tail(readout.size()) = readout;
  return p;
}

void TrainableModel::set_params(const Vector& p) {
  detail::require_same_size(num_params(), p.size(), "set_params");
  Eigen::Index at = 0;
  for (int f = 0; f < num_filters(); ++f)
    for (int k = 0; k < num_taps(); ++k) taps(f, k) = p(at++);
  readout = p.tail(readout.size());
}

ModelFile TrainableModel::to_file() const { return ModelFile{Bank(taps), Readout<double>(readout), active_sigma()}; }

TrainableModel from_model_file(const ModelFile& m, bool use_nonlinearity) {
  return TrainableModel{m.bank.taps, m.readout.weights, m.sigma, use_nonlinearity};
}

TrainableModel init_model(int num_filters, int num_taps, const Sigma& sigma, bool use_nonlinearity,
                          std::mt19937_64& rng) {
  if (num_filters < 1 || num_taps < 1) throw InvalidConfiguration("init_model: need F >= 1 and K+1 >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(num_filters * num_taps));
  std::uniform_real_distribution<double> u(-bound, bound);
  TrainableModel m;
  m.taps.resize(num_filters, num_taps);
  for (int f = 0; f < num_filters; ++f)
    for (int k = 0; k < num_taps; ++k) m.taps(f, k) = u(rng);
  m.readout.resize(num_filters);
  for (int f = 0; f < num_filters; ++f) m.readout(f) = u(rng);
  m.sigma = sigma;
  m.use_nonlinearity = use_nonlinearity;
  return m;
}

LossAndGrad mse_loss(const Matrix& pred, const Matrix& target) {
  detail::require_same_size(target.rows(), pred.rows(), "mse_loss rows");
  detail::require_same_size(target.cols(), pred.cols(), "mse_loss cols");
  const double count = static_cast<double>(pred.size());
  const Matrix diff = pred - target;
  return LossAndGrad{diff.squaredNorm() / count, 2.0 * diff / count};
}

LossAndGrad il_regularizer(const Matrix& taps, double lam_max, double weight) {
  LossAndGrad out{0.0, Matrix::Zero(taps.rows(), taps.cols())};
  if (weight == 0.0) return out;
  if (weight < 0.0) throw InvalidInput("il_regularizer: weight must be nonnegative");

  double best = -1;
  Eigen::Index best_f = 0;
  double best_lam = 0, best_q = 0;
  for (Eigen::Index f = 0; f < taps.rows(); ++f) {
    const Fir filter(taps.row(f).transpose());
    for (int i = 0; i < kFrequencyGridPoints; ++i) {
      const double lam = frequency_grid_point(i, lam_max);
      const double q = lam * freq_response_derivative(filter, lam);
      if (std::abs(q) > best) {
        best = std::abs(q);
        best_f = f;
        best_lam = lam;
        best_q = q;
      }
    }
  }
  out.value = weight * best;
  // d/dh_k |lam h'(lam)| = sign(q) * k * lam^k
  const double sign = best_q > 0 ? 1.0 : (best_q < 0 ? -1.0 : 0.0);
  for (Eigen::Index k = 1; k < taps.cols(); ++k) {
    out.grad(best_f, k) = weight * sign * static_cast<double>(k) * std::pow(best_lam, static_cast<double>(k));
  }
  return out;
}

double il_argmax_gap(const Matrix& taps, double lam_max) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(taps.rows()) * kFrequencyGridPoints);
  for (Eigen::Index f = 0; f < taps.rows(); ++f) {
    const Fir filter(taps.row(f).transpose());
    for (int i = 0; i < kFrequencyGridPoints; ++i) {
      const double lam = frequency_grid_point(i, lam_max);
      values.push_back(std::abs(lam * freq_response_derivative(filter, lam)));
    }
  }
  if (values.size() < 2) return std::numeric_limits<double>::infinity();
  std::partial_sort(values.begin(), values.begin() + 2, values.end(), std::greater<>());
  return values[0] - values[1];
}

Vector ModelGradients::flat() const {
  Vector g(taps.size() + readout.size());
  Eigen::Index at = 0;
  for (Eigen::Index f = 0; f < taps.rows(); ++f)
    for (Eigen::Index k = 0; k < taps.cols(); ++k) g(at++) = taps(f, k);
  g.tail(readout.size()) = readout;
  return g;
}

Matrix model_forward(const TrainableModel& model, const Support& s, const Matrix& inputs) {
  detail::require_same_size(model.num_filters(), model.readout.size(), "model readout");
  const auto z = shift_stack(s, inputs, model.num_taps());
  const Sigma sigma = model.active_sigma();
  Matrix out = Matrix::Zero(inputs.rows(), inputs.cols());
  for (int f = 0; f < model.num_filters(); ++f) out += model.readout(f) * sigma.eval(pre_activation(model, z, f));
  return out;
}

ModelGradients model_backward(const TrainableModel& model, const Support& s, const Matrix& inputs,
                              const Matrix& targets, const TrainConfig& config) {
  detail::require_same_size(model.num_filters(), model.readout.size(), "model readout");
  const auto z = shift_stack(s, inputs, model.num_taps());
  const Sigma sigma = model.active_sigma();
  const int num_f = model.num_filters();

  std::vector<Matrix> pre(static_cast<std::size_t>(num_f));
  std::vector<Matrix> act(static_cast<std::size_t>(num_f));
  Matrix pred = Matrix::Zero(inputs.rows(), inputs.cols());
  for (int f = 0; f < num_f; ++f) {
    pre[f] = pre_activation(model, z, f);
    act[f] = sigma.eval(pre[f]);
    pred += model.readout(f) * act[f];
  }
  const LossAndGrad fit = mse_loss(pred, targets);

  ModelGradients g;
  g.mse = fit.value;
  g.readout.resize(num_f);
  g.taps.resize(num_f, model.num_taps());
  for (int f = 0; f < num_f; ++f) {
    g.readout(f) = act[f].cwiseProduct(fit.grad).sum();
    const Matrix dpre = (model.readout(f) * fit.grad).cwiseProduct(sigma.derivative(pre[f]));
    for (int k = 0; k < model.num_taps(); ++k) g.taps(f, k) = dpre.cwiseProduct(z[k]).sum();
  }
  const LossAndGrad reg = il_regularizer(model.taps, config.lam_max, config.il_weight);
  g.regularizer = reg.value;
  g.taps += reg.grad;
  g.loss = g.mse + g.regularizer;
  return g;
}

double evaluate_mse(const TrainableModel& model, const Support& s, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  return mse_loss(model_forward(model, s, data.inputs), data.targets).value;
}

AdamState AdamState::for_params(Eigen::Index size, double learning_rate, double decay) {
  AdamState st;
  st.m = Vector::Zero(size);
  st.v = Vector::Zero(size);
  st.learning_rate = learning_rate;
  st.per_epoch_decay = decay;
  return st;
}

void adam_step(AdamState& state, Vector& params, const Vector& grads) {
  detail::require_same_size(params.size(), grads.size(), "adam_step grads");
  detail::require_same_size(params.size(), state.m.size(), "adam_step state");
  ++state.t;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  params.array() -= state.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.epsilon);
}

TrainResult train(TrainableModel model, const Support& s, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config) {
  if (train_set.size() == 0 || val_set.size() == 0) throw InvalidInput("train: empty dataset");
  if (config.batch_size < 1 || config.epochs < 0) throw InvalidConfiguration("train: bad epochs/batch size");

  std::mt19937_64 rng(config.seed);
  AdamState adam = AdamState::for_params(model.num_params(), config.learning_rate, config.decay);
  Vector params = model.params();

  auto record = [&](int epoch) {
    return HistoryRow{epoch, evaluate_mse(model, s, train_set), evaluate_mse(model, s, val_set),
                      bank_il_constant(Bank(model.taps), config.lam_max), adam.learning_rate};
  };

  TrainResult result;
  result.history.push_back(record(0));
  result.model = model;
  double best_val = result.history.back().val_loss;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const Matrix xb = gather_columns(train_set.inputs, order, begin, end);
      const Matrix yb = gather_columns(train_set.targets, order, begin, end);
      const ModelGradients g = model_backward(model, s, xb, yb, config);
      adam_step(adam, params, g.flat());
      model.set_params(params);
    }
    result.history.push_back(record(epoch));
    if (result.history.back().val_loss < best_val) {
      best_val = result.history.back().val_loss;
      result.model = model;
      result.best_epoch = epoch;
    }
    adam.learning_rate *= adam.per_epoch_decay;
  }
  return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << std::setprecision(17);
  out << "epoch,train_loss,val_loss,il_constant,learning_rate\n";
  for (const auto& h : history)
    out << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.il_constant << ',' << h.learning_rate
        << '\n';
  if (!out) throw IoError("write to " + path + " failed");
}

GradCheckResult check_gradients(const TrainableModel& model, const Support& s, const Matrix& inputs,
                                const Matrix& targets, const TrainConfig& config, double step) {
  const Vector analytic = model_backward(model, s, inputs, targets, config).flat();
  TrainableModel probe = model;
  const Vector base = model.params();
  GradCheckResult r;
  r.coordinates = base.size();
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Vector p = base;
    p(i) = base(i) + step;
    probe.set_params(p);
    const double up = model_backward(probe, s, inputs, targets, config).loss;
    p(i) = base(i) - step;
    probe.set_params(p);
    const double down = model_backward(probe, s, inputs, targets, config).loss;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic(i);
    const double mag = std::max(std::abs(a), std::abs(numeric));
    const double ratio = std::abs(a - numeric) / std::max(1e-4 * mag, 1e-6);
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_index = i;
      r.worst_relative = mag > 0 ? std::abs(a - numeric) / mag : 0.0;
    }
  }
  return r;
}

}  // namespace gdisc
