#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gdisc/errors.hpp"
#include "gdisc/graph.hpp"
#include "gdisc/jacobi.hpp"

namespace gdisc {

/// Eigendecomposition S = V diag(lambda) V^T with eigenvalues ordered by
/// ascending magnitude (ties by ascending signed value) and each eigenvector's
/// first significant component made positive.
template <typename Scalar>
struct Spectrum {
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> eigenvectors;

  int n() const { return static_cast<int>(eigenvalues.size()); }
};

/// Partition of a spectrum at index k: the k smallest-magnitude eigenpairs
/// versus the remaining n - k.
template <typename Scalar>
struct SubspaceSplit {
  int k = 0;
  MatrixX<Scalar> v_low;
  MatrixX<Scalar> v_high;
  VectorX<Scalar> lambda_low;
  VectorX<Scalar> lambda_high;

  int n() const { return static_cast<int>(v_low.rows()); }
};

using Split = SubspaceSplit<double>;

enum class Band { low, high };

template <typename Derived>
Spectrum<typename Derived::Scalar> eig_sym(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  auto raw = jacobi_eigen(s.derived());
  const Eigen::Index n = raw.eigenvalues.size();

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const Scalar la = raw.eigenvalues(a), lb = raw.eigenvalues(b);
    if (std::abs(la) != std::abs(lb)) return std::abs(la) < std::abs(lb);
    return la < lb;
  });

  Spectrum<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = raw.eigenvalues(order[i]);
    auto col = out.eigenvectors.col(i);
    col = raw.eigenvectors.col(order[i]);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(col(r)) > Scalar(1e-12)) {
        if (col(r) < 0) col = -col;
        break;
      }
    }
  }
  return out;
}

template <typename Scalar>
Spectrum<Scalar> eig_sym(const SupportMatrix<Scalar>& s) {
  return eig_sym(s.entries());
}

/// Graph Fourier transform V^T x.
template <typename Scalar, typename Derived>
VectorX<Scalar> gft(const Spectrum<Scalar>& spec, const Eigen::MatrixBase<Derived>& x) {
  detail::require_same_size(spec.n(), x.size(), "gft");
  return spec.eigenvectors.transpose() * x;
}

/// Inverse transform V xt.
template <typename Scalar, typename Derived>
VectorX<Scalar> igft(const Spectrum<Scalar>& spec, const Eigen::MatrixBase<Derived>& xt) {
  detail::require_same_size(spec.n(), xt.size(), "igft");
  return spec.eigenvectors * xt;
}

template <typename Scalar>
SubspaceSplit<Scalar> split_subspace(const Spectrum<Scalar>& spec, int k) {
  const int n = spec.n();
  if (k <= 0 || k >= n) {
    throw InvalidConfiguration("split_subspace: need 0 < k < n (k=" + std::to_string(k) +
                               ", n=" + std::to_string(n) + ")");
  }
  SubspaceSplit<Scalar> out;
  out.k = k;
  out.v_low = spec.eigenvectors.leftCols(k);
  out.v_high = spec.eigenvectors.rightCols(n - k);
  out.lambda_low = spec.eigenvalues.head(k);
  out.lambda_high = spec.eigenvalues.tail(n - k);
  return out;
}

/// Orthogonal projection onto span(V_K) or span(V_{N-K}), optionally rescaled to unit norm.
template <typename Scalar, typename Derived>
VectorX<Scalar> project_subspace(const SubspaceSplit<Scalar>& split, const Eigen::MatrixBase<Derived>& w, Band which,
                                 bool normalize) {
  detail::require_same_size(split.n(), w.size(), "project_subspace");
  const MatrixX<Scalar>& basis = which == Band::low ? split.v_low : split.v_high;
  VectorX<Scalar> p = basis * (basis.transpose() * w);
  if (normalize) {
    const Scalar norm = p.norm();
    if (norm < Scalar(1e-12)) {
      throw DegenerateProjection("project_subspace: projection norm below 1e-12");
    }
    p /= norm;
  }
  return p;
}

}  // namespace gdisc
