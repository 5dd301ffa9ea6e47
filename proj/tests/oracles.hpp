#pragma once

// Reference computations kept independent of the library code paths they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool connected(const Matrix& weights) {
  const auto n = weights.rows();
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Eigen::Index count = 1;
  while (!frontier.empty()) {
    const auto i = frontier.front();
    frontier.pop();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (weights(i, j) > 0 && !seen[j]) {
        seen[j] = true;
        ++count;
        frontier.push(j);
      }
    }
  }
  return count == n;
}

/// Roots of det(A - t I) for symmetric 2x2, ascending.
inline std::vector<double> eig2(const Matrix& a) {
  const double mid = 0.5 * (a(0, 0) + a(1, 1));
  const double half = 0.5 * (a(0, 0) - a(1, 1));
  const double r = std::sqrt(half * half + a(0, 1) * a(0, 1));
  return {mid - r, mid + r};
}

/// Roots of the characteristic cubic of a symmetric 3x3, ascending (trigonometric form).
inline std::vector<double> eig3(const Matrix& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  const double q = a.trace() / 3.0;
  if (p1 == 0) {
    std::vector<double> d{a(0, 0), a(1, 1), a(2, 2)};
    std::sort(d.begin(), d.end());
    return d;
  }
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) +
                    2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Matrix b = (a - q * Matrix::Identity(3, 3)) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double e2 = 3.0 * q - e1 - e3;
  std::vector<double> out{e1, e2, e3};
  std::sort(out.begin(), out.end());
  return out;
}

/// sum_k h_k S^k x with every matrix power formed explicitly.
inline Vector dense_fir(const Vector& taps, const Matrix& s, const Vector& x) {
  const auto n = s.rows();
  Matrix power = Matrix::Identity(n, n);
  Matrix total = Matrix::Zero(n, n);
  for (Eigen::Index k = 0; k < taps.size(); ++k) {
    total += taps(k) * power;
    power = power * s;
  }
  return total * x;
}

inline double power_sum(const Vector& taps, double lam) {
  double acc = 0;
  for (Eigen::Index k = 0; k < taps.size(); ++k) acc += taps(k) * std::pow(lam, double(k));
  return acc;
}

inline Matrix random_permutation(int n, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  Matrix p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) p(i, idx[i]) = 1.0;
  return p;
}

inline Matrix random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return 0.5 * (a + a.transpose());
}

inline Vector random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

/// Mean squared error accumulated in two passes: per-column sums, then the total.
inline double mse_two_pass(const Matrix& pred, const Matrix& target) {
  std::vector<double> column_sums;
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    double s = 0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double d = pred(i, j) - target(i, j);
      s += d * d;
    }
    column_sums.push_back(s);
  }
  double total = 0;
  for (double s : column_sums) total += s;
  return total / double(pred.size());
}

/// Loss of the filter-bank/GNN regression model evaluated entry by entry, with the
/// integral Lipschitz penalty taken over the same 257-point grid.
inline double naive_loss(const Matrix& taps, const Vector& readout, bool use_tanh, const Matrix& s,
                         const Matrix& inputs, const Matrix& targets, double il_weight, double lam_max) {
  const auto n = s.rows();
  const auto features = taps.rows();
  const auto batch = inputs.cols();
  double sq = 0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    Vector pred = Vector::Zero(n);
    for (Eigen::Index f = 0; f < features; ++f) {
      const Vector z = dense_fir(taps.row(f).transpose(), s, inputs.col(b));
      for (Eigen::Index i = 0; i < n; ++i) pred(i) += readout(f) * (use_tanh ? std::tanh(z(i)) : z(i));
    }
    for (Eigen::Index i = 0; i < n; ++i) sq += (pred(i) - targets(i, b)) * (pred(i) - targets(i, b));
  }
  double il = 0;
  for (Eigen::Index f = 0; f < features; ++f) {
    for (int g = 0; g < 257; ++g) {
      const double lam = lam_max * g / 256.0;
      double deriv = 0;
      for (Eigen::Index k = 1; k < taps.cols(); ++k) deriv += double(k) * taps(f, k) * std::pow(lam, double(k - 1));
      il = std::max(il, std::abs(lam * deriv));
    }
  }
  return sq / double(n * batch) + il_weight * il;
}

}  // namespace oracle
