#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <variant>

#include "gdisc/errors.hpp"
#include "gdisc/filtering.hpp"
#include "gdisc/graph.hpp"
#include "gdisc/spectral.hpp"

namespace gdisc {

enum class SigmaKind { tanh, identity, leaky_rectifier };

/// Pointwise nonlinearity. Every provided kind is strictly increasing with Lipschitz constant 1.
template <typename Scalar>
class Nonlinearity {
 public:
  Nonlinearity() = default;

  static Nonlinearity tanh() { return Nonlinearity(SigmaKind::tanh, 0); }
  static Nonlinearity identity() { return Nonlinearity(SigmaKind::identity, 0); }
  static Nonlinearity leaky_rectifier(Scalar slope) {
    if (!(slope > 0 && slope < 1)) throw InvalidConfiguration("leaky_rectifier: slope must lie in (0, 1)");
    return Nonlinearity(SigmaKind::leaky_rectifier, slope);
  }

  SigmaKind kind() const { return kind_; }
  Scalar slope() const { return slope_; }

  Scalar eval(Scalar t) const {
    switch (kind_) {
      case SigmaKind::tanh: return std::tanh(t);
      case SigmaKind::identity: return t;
      case SigmaKind::leaky_rectifier: return t >= 0 ? t : slope_ * t;
    }
    return t;
  }

  Scalar derivative(Scalar t) const {
    switch (kind_) {
      case SigmaKind::tanh: {
        const Scalar th = std::tanh(t);
        return Scalar(1) - th * th;
      }
      case SigmaKind::identity: return Scalar(1);
      case SigmaKind::leaky_rectifier: return t >= 0 ? Scalar(1) : slope_;
    }
    return Scalar(1);
  }

  template <typename Derived>
  MatrixX<Scalar> eval(const Eigen::MatrixBase<Derived>& m) const {
    return m.unaryExpr([this](Scalar t) { return eval(t); });
  }
  template <typename Derived>
  MatrixX<Scalar> derivative(const Eigen::MatrixBase<Derived>& m) const {
    return m.unaryExpr([this](Scalar t) { return derivative(t); });
  }

  Scalar lipschitz_constant() const { return Scalar(1); }
  bool strictly_monotone() const { return true; }

  friend bool operator==(const Nonlinearity& a, const Nonlinearity& b) {
    return a.kind_ == b.kind_ && a.slope_ == b.slope_;
  }

 private:
  Nonlinearity(SigmaKind kind, Scalar slope) : kind_(kind), slope_(slope) {}

  SigmaKind kind_ = SigmaKind::tanh;
  Scalar slope_ = 0;
};

/// F spectral filters over one spectrum; column f holds the gains of filter f.
template <typename Scalar>
struct SpectralBank {
  MatrixX<Scalar> responses;  // n x F

  SpectralBank() = default;
  explicit SpectralBank(MatrixX<Scalar> r) : responses(std::move(r)) {
    if (responses.cols() == 0) throw InvalidInput("SpectralBank: need F >= 1");
    if (!responses.allFinite()) throw InvalidInput("SpectralBank: non-finite gain");
  }
  explicit SpectralBank(const std::vector<SpectralFilter<Scalar>>& filters) {
    if (filters.empty()) throw InvalidInput("SpectralBank: need F >= 1");
    responses.resize(filters.front().response.size(), static_cast<Eigen::Index>(filters.size()));
    for (std::size_t f = 0; f < filters.size(); ++f) {
      detail::require_same_size(responses.rows(), filters[f].response.size(), "SpectralBank filter");
      responses.col(static_cast<Eigen::Index>(f)) = filters[f].response;
    }
  }

  int num_filters() const { return static_cast<int>(responses.cols()); }
  SpectralFilter<Scalar> filter(int f) const { return SpectralFilter<Scalar>(responses.col(f)); }
};

/// Support matrix paired with its spectrum, so either filter representation can be applied.
template <typename Scalar>
struct GraphDomain {
  SupportMatrix<Scalar> support;
  Spectrum<Scalar> spectrum;

  int n() const { return support.n(); }
};

template <typename Scalar>
GraphDomain<Scalar> make_domain(SupportMatrix<Scalar> s) {
  auto spec = eig_sym(s);
  return GraphDomain<Scalar>{std::move(s), std::move(spec)};
}

/// Gain of each bank filter at each eigenvalue (n x F).
template <typename Scalar>
MatrixX<Scalar> bank_responses(const FilterBank<Scalar>& bank, const Spectrum<Scalar>& spec) {
  MatrixX<Scalar> r(spec.n(), bank.num_filters());
  for (int f = 0; f < bank.num_filters(); ++f) r.col(f) = freq_response(bank.filter(f), spec);
  return r;
}

template <typename Scalar>
MatrixX<Scalar> bank_responses(const SpectralBank<Scalar>& bank, const Spectrum<Scalar>&) {
  return bank.responses;
}

/// Filter-bank features, one column per filter (n x F).
template <typename Scalar, typename Derived>
MatrixX<Scalar> bank_forward(const FilterBank<Scalar>& bank, const SupportMatrix<Scalar>& s,
                             const Eigen::MatrixBase<Derived>& x) {
  detail::require_same_size(s.n(), x.size(), "bank_forward");
  // shifted[:, k] = S^k x, shared by every filter
  MatrixX<Scalar> shifted(s.n(), bank.num_taps());
  shifted.col(0) = x;
  for (int k = 1; k < bank.num_taps(); ++k) shifted.col(k) = s.entries() * shifted.col(k - 1);
  return shifted * bank.taps.transpose();
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> bank_forward(const SpectralBank<Scalar>& bank, const Spectrum<Scalar>& spec,
                             const Eigen::MatrixBase<Derived>& x) {
  detail::require_same_size(spec.n(), x.size(), "bank_forward");
  detail::require_same_size(spec.n(), bank.responses.rows(), "bank_forward responses");
  const VectorX<Scalar> xt = spec.eigenvectors.transpose() * x;
  return spec.eigenvectors * (bank.responses.array().colwise() * xt.array()).matrix();
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> bank_forward(const FilterBank<Scalar>& bank, const GraphDomain<Scalar>& d,
                             const Eigen::MatrixBase<Derived>& x) {
  return bank_forward(bank, d.support, x);
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> bank_forward(const SpectralBank<Scalar>& bank, const GraphDomain<Scalar>& d,
                             const Eigen::MatrixBase<Derived>& x) {
  return bank_forward(bank, d.spectrum, x);
}

/// Single-layer GNN: feature f is sigma(H^f x).
template <typename Scalar>
struct SingleLayerGnn {
  std::variant<FilterBank<Scalar>, SpectralBank<Scalar>> bank;
  Nonlinearity<Scalar> sigma;

  int num_features() const {
    return std::visit([](const auto& b) { return b.num_filters(); }, bank);
  }
};

template <typename Scalar, typename Derived>
MatrixX<Scalar> bank_forward(const SingleLayerGnn<Scalar>& gnn, const GraphDomain<Scalar>& d,
                             const Eigen::MatrixBase<Derived>& x) {
  return std::visit([&](const auto& b) { return bank_forward(b, d, x); }, gnn.bank);
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> gnn_forward(const SingleLayerGnn<Scalar>& gnn, const GraphDomain<Scalar>& d,
                            const Eigen::MatrixBase<Derived>& x) {
  return gnn.sigma.eval(bank_forward(gnn, d, x));
}

template <typename Scalar>
MatrixX<Scalar> bank_responses(const SingleLayerGnn<Scalar>& gnn, const Spectrum<Scalar>& spec) {
  return std::visit([&](const auto& b) { return bank_responses(b, spec); }, gnn.bank);
}

/// Shared per-feature weights mixing F features into one output signal; no bias.
template <typename Scalar>
struct Readout {
  VectorX<Scalar> weights;

  Readout() = default;
  explicit Readout(VectorX<Scalar> w) : weights(std::move(w)) {
    if (!weights.allFinite()) throw InvalidInput("Readout: non-finite weight");
  }
};

template <typename Scalar, typename Derived>
VectorX<Scalar> readout_apply(const Readout<Scalar>& r, const Eigen::MatrixBase<Derived>& features) {
  detail::require_same_size(r.weights.size(), features.cols(), "readout_apply");
  return features * r.weights;
}

using Sigma = Nonlinearity<double>;
using Gnn = SingleLayerGnn<double>;
using Domain = GraphDomain<double>;

/// FIR filter bank, readout and nonlinearity, as stored on disk.
struct ModelFile {
  Bank bank;
  Readout<double> readout;
  Sigma sigma;
};

// Model text format: bank format, then one line of F readout weights, then one sigma
// descriptor line ("tanh", "identity" or "leaky_rectifier <slope>").
std::string format_sigma(const Sigma& s);
Sigma parse_sigma(const std::string& line);
std::string format_model(const ModelFile& m);
ModelFile parse_model(const std::string& text);
void write_model(const ModelFile& m, const std::string& path);
ModelFile read_model(const std::string& path);

}  // namespace gdisc
