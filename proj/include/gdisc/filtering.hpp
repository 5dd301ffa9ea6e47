#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "gdisc/errors.hpp"
#include "gdisc/graph.hpp"
#include "gdisc/spectral.hpp"

namespace gdisc {

/// Number of uniformly spaced points on [0, lam_max] used to estimate
/// integral Lipschitz constants and cutoff frequencies.
inline constexpr int kFrequencyGridPoints = 257;

/// Polynomial graph filter sum_k h_k S^k.
template <typename Scalar>
struct FirFilter {
  VectorX<Scalar> taps;

  FirFilter() = default;
  explicit FirFilter(VectorX<Scalar> t) : taps(std::move(t)) {
    if (taps.size() == 0) throw InvalidInput("FirFilter: at least one tap required");
    if (!taps.allFinite()) throw InvalidInput("FirFilter: non-finite tap");
  }
  FirFilter(std::initializer_list<Scalar> t) : FirFilter(VectorX<Scalar>(Eigen::Map<const VectorX<Scalar>>(t.begin(), t.size()))) {}

  int num_taps() const { return static_cast<int>(taps.size()); }
};

/// F filters sharing one tap count, stored row-wise (F x (K+1)).
template <typename Scalar>
struct FilterBank {
  MatrixX<Scalar> taps;

  FilterBank() = default;
  explicit FilterBank(MatrixX<Scalar> t) : taps(std::move(t)) {
    if (taps.rows() == 0 || taps.cols() == 0) throw InvalidInput("FilterBank: need F >= 1 and at least one tap");
    if (!taps.allFinite()) throw InvalidInput("FilterBank: non-finite tap");
  }
  explicit FilterBank(const std::vector<FirFilter<Scalar>>& filters) {
    if (filters.empty()) throw InvalidInput("FilterBank: need F >= 1");
    taps.resize(static_cast<Eigen::Index>(filters.size()), filters.front().num_taps());
    for (std::size_t f = 0; f < filters.size(); ++f) {
      if (filters[f].num_taps() != taps.cols()) throw InvalidInput("FilterBank: filters differ in tap count");
      taps.row(static_cast<Eigen::Index>(f)) = filters[f].taps.transpose();
    }
  }

  int num_filters() const { return static_cast<int>(taps.rows()); }
  int num_taps() const { return static_cast<int>(taps.cols()); }
  FirFilter<Scalar> filter(int f) const { return FirFilter<Scalar>(taps.row(f).transpose()); }
};

/// Filter defined directly by its gain at each eigenvalue of a spectrum.
template <typename Scalar>
struct SpectralFilter {
  VectorX<Scalar> response;

  SpectralFilter() = default;
  explicit SpectralFilter(VectorX<Scalar> r) : response(std::move(r)) {
    if (!response.allFinite()) throw InvalidInput("SpectralFilter: non-finite gain");
  }
};

/// Computes sum_k h_k S^k x through repeated shifts.
template <typename Scalar, typename Derived>
VectorX<Scalar> apply_fir(const FirFilter<Scalar>& f, const SupportMatrix<Scalar>& s,
                          const Eigen::MatrixBase<Derived>& x) {
  detail::require_same_size(s.n(), x.size(), "apply_fir");
  VectorX<Scalar> z = x;
  VectorX<Scalar> y = f.taps(0) * z;
  for (int k = 1; k < f.num_taps(); ++k) {
    z = s.entries() * z;
    y += f.taps(k) * z;
  }
  return y;
}

/// Horner evaluation of h(lambda).
template <typename Scalar>
Scalar freq_response(const FirFilter<Scalar>& f, Scalar lam) {
  Scalar acc = 0;
  for (int k = f.num_taps() - 1; k >= 0; --k) acc = acc * lam + f.taps(k);
  return acc;
}

/// Horner evaluation of h'(lambda).
template <typename Scalar>
Scalar freq_response_derivative(const FirFilter<Scalar>& f, Scalar lam) {
  Scalar acc = 0;
  for (int k = f.num_taps() - 1; k >= 1; --k) acc = acc * lam + Scalar(k) * f.taps(k);
  return acc;
}

/// h evaluated at every eigenvalue of `spec`.
template <typename Scalar>
VectorX<Scalar> freq_response(const FirFilter<Scalar>& f, const Spectrum<Scalar>& spec) {
  return spec.eigenvalues.unaryExpr([&](Scalar lam) { return freq_response(f, lam); });
}

template <typename Scalar, typename Derived>
VectorX<Scalar> apply_spectral(const SpectralFilter<Scalar>& sf, const Spectrum<Scalar>& spec,
                               const Eigen::MatrixBase<Derived>& x) {
  detail::require_same_size(spec.n(), sf.response.size(), "apply_spectral response");
  detail::require_same_size(spec.n(), x.size(), "apply_spectral signal");
  return spec.eigenvectors * sf.response.cwiseProduct(spec.eigenvectors.transpose() * x);
}

template <typename Scalar>
Scalar frequency_grid_point(int i, Scalar lam_max) {
  return lam_max * Scalar(i) / Scalar(kFrequencyGridPoints - 1);
}

/// Grid estimate of the integral Lipschitz constant: max |lambda h'(lambda)| on [0, lam_max].
template <typename Scalar>
Scalar il_constant(const FirFilter<Scalar>& f, Scalar lam_max) {
  if (!(lam_max > 0)) throw InvalidInput("il_constant: lam_max must be positive");
  Scalar best = 0;
  for (int i = 0; i < kFrequencyGridPoints; ++i) {
    const Scalar lam = frequency_grid_point(i, lam_max);
    best = std::max(best, std::abs(lam * freq_response_derivative(f, lam)));
  }
  return best;
}

template <typename Scalar>
Scalar bank_il_constant(const FilterBank<Scalar>& b, Scalar lam_max) {
  Scalar best = 0;
  for (int f = 0; f < b.num_filters(); ++f) best = std::max(best, il_constant(b.filter(f), lam_max));
  return best;
}

/// Smallest grid frequency above which |h'| stays below eps on the whole grid.
/// Returns lam_max when even the last grid point violates the bound.
template <typename Scalar>
Scalar cutoff_frequency(const FirFilter<Scalar>& f, Scalar eps, Scalar lam_max) {
  if (!(eps > 0)) throw InvalidInput("cutoff_frequency: eps must be positive");
  for (int i = kFrequencyGridPoints - 1; i >= 0; --i) {
    const Scalar lam = frequency_grid_point(i, lam_max);
    if (!(std::abs(freq_response_derivative(f, lam)) < eps)) return lam;
  }
  return Scalar(0);
}

/// Spectral filter passing `low_profile` on the first k eigenvalues and exactly zero above.
template <typename Scalar, typename Derived>
SpectralFilter<Scalar> zero_high_response(const Spectrum<Scalar>& spec, int k,
                                          const Eigen::MatrixBase<Derived>& low_profile) {
  if (k <= 0 || k >= spec.n()) throw InvalidConfiguration("zero_high_response: need 0 < k < n");
  detail::require_same_size(k, low_profile.size(), "zero_high_response profile");
  VectorX<Scalar> r = VectorX<Scalar>::Zero(spec.n());
  r.head(k) = low_profile;
  return SpectralFilter<Scalar>(std::move(r));
}

using Fir = FirFilter<double>;
using Bank = FilterBank<double>;
using Spectral = SpectralFilter<double>;

// Bank text format: "F K+1" then F lines of taps, 17 significant digits.
std::string format_bank(const Bank& b);
Bank parse_bank(const std::string& text);
void write_bank(const Bank& b, const std::string& path);
Bank read_bank(const std::string& path);

}  // namespace gdisc
