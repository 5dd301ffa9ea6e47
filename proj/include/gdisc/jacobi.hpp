#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "gdisc/errors.hpp"

namespace gdisc {

template <typename Scalar>
struct JacobiResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eigenvalues;               // unsorted
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // columns
  int sweeps = 0;
};

/// Largest absolute asymmetry |a_ij - a_ji|.
template <typename Derived>
typename Derived::Scalar max_asymmetry(const Eigen::MatrixBase<Derived>& a) {
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Sweeps over all (p, q) pairs in row order, annihilating a_pq with one
/// rotation each, until the largest off-diagonal magnitude drops below
/// `rel_tol * max|a_ij|`. Throws InvalidInput on asymmetric input and
/// NumericalFailure when `max_sweeps` is exhausted.
template <typename Derived>
JacobiResult<typename Derived::Scalar> jacobi_eigen(const Eigen::MatrixBase<Derived>& input,
                                                    typename Derived::Scalar rel_tol = 1e-12,
                                                    int max_sweeps = 100) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  if (input.rows() != input.cols()) {
    throw ShapeError("jacobi_eigen: matrix is not square");
  }
  const Eigen::Index n = input.rows();
  Matrix a = input;
  const Scalar scale = n > 0 ? a.cwiseAbs().maxCoeff() : Scalar(0);
  if (n > 0 && max_asymmetry(a) > Scalar(1e-10) * std::max(Scalar(1), scale)) {
    throw InvalidInput("jacobi_eigen: matrix is not symmetric");
  }
  a = (a + a.transpose()) / Scalar(2);

  JacobiResult<Scalar> out;
  out.eigenvectors = Matrix::Identity(n, n);
  const Scalar threshold = rel_tol * scale;

  auto max_off_diagonal = [&] {
    Scalar m = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < j; ++i) m = std::max(m, std::abs(a(i, j)));
    return m;
  };

  int sweep = 0;
  while (max_off_diagonal() > threshold) {
    if (sweep == max_sweeps) {
      throw NumericalFailure("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                             " sweeps");
    }
    ++sweep;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Symmetric Schur decomposition of the (p, q) block.
        const Scalar tau = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (tau >= 0 ? Scalar(1) : Scalar(-1)) /
                         (std::abs(tau) + std::sqrt(Scalar(1) + tau * tau));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar vkp = out.eigenvectors(k, p);
          const Scalar vkq = out.eigenvectors(k, q);
          out.eigenvectors(k, p) = c * vkp - s * vkq;
          out.eigenvectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  out.eigenvalues = a.diagonal();
  out.sweeps = sweep;
  return out;
}

}  // namespace gdisc
