#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gdisc/errors.hpp"
#include "gdisc/jacobi.hpp"

namespace gdisc {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using MaskX = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Undirected k-nearest-neighbour graph on points in the unit square.
template <typename Scalar>
struct GeometricGraph {
  int n = 0;
  int k_neighbors = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> positions;
  MatrixX<Scalar> weights;  // symmetric, zero diagonal
  std::uint64_t seed = 0;
};

/// Symmetric graph shift operator together with the pattern of permitted nonzeros.
/// The diagonal is always permitted.
template <typename Scalar>
class SupportMatrix {
 public:
  SupportMatrix() = default;

  SupportMatrix(MatrixX<Scalar> entries, MaskX mask) : entries_(std::move(entries)), mask_(std::move(mask)) {
    if (entries_.rows() != entries_.cols()) throw ShapeError("SupportMatrix: entries not square");
    detail::require_same_size(entries_.rows(), mask_.rows(), "SupportMatrix mask rows");
    detail::require_same_size(entries_.cols(), mask_.cols(), "SupportMatrix mask cols");
    mask_.diagonal().setConstant(true);
    const Scalar scale = entries_.size() ? entries_.cwiseAbs().maxCoeff() : Scalar(0);
    if (entries_.size() && max_asymmetry(entries_) > Scalar(1e-12) * std::max(Scalar(1), scale)) {
      throw InvalidInput("SupportMatrix: entries are not symmetric");
    }
    for (Eigen::Index i = 0; i < entries_.rows(); ++i)
      for (Eigen::Index j = 0; j < entries_.cols(); ++j)
        if (!mask_(i, j) && entries_(i, j) != Scalar(0))
          throw InvalidInput("SupportMatrix: nonzero entry outside the sparsity pattern");
  }

  /// Mask taken from the nonzero pattern of `entries`.
  static SupportMatrix from_dense(MatrixX<Scalar> entries) {
    MaskX mask = entries.array() != Scalar(0);
    return SupportMatrix(std::move(entries), std::move(mask));
  }

  int n() const { return static_cast<int>(entries_.rows()); }
  const MatrixX<Scalar>& entries() const { return entries_; }
  const MaskX& mask() const { return mask_; }

 private:
  MatrixX<Scalar> entries_;
  MaskX mask_;
};

namespace detail {

template <typename Scalar>
GeometricGraph<Scalar> knn_graph(Eigen::Matrix<Scalar, Eigen::Dynamic, 2> positions, int k_neighbors,
                                 std::uint64_t seed) {
  const int n = static_cast<int>(positions.rows());
  if (k_neighbors <= 0 || n <= k_neighbors) {
    throw InvalidConfiguration("geometric graph needs 0 < k_neighbors < n (n=" + std::to_string(n) +
                               ", k=" + std::to_string(k_neighbors) + ")");
  }
  MatrixX<Scalar> dist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) dist(i, j) = (positions.row(i) - positions.row(j)).norm();

  MaskX adjacent = MaskX::Constant(n, n, false);
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    // ties go to the lower index
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist(i, a) < dist(i, b); });
    for (int r = 0; r < k_neighbors; ++r) {
      adjacent(i, order[r]) = true;
      adjacent(order[r], i) = true;
    }
  }

  GeometricGraph<Scalar> g;
  g.n = n;
  g.k_neighbors = k_neighbors;
  g.seed = seed;
  g.weights = MatrixX<Scalar>::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adjacent(i, j)) g.weights(i, j) = std::exp(-dist(i, j));
  g.positions = std::move(positions);
  return g;
}

}  // namespace detail

/// Nodes uniform on [0,1]^2, each joined to its k nearest neighbours (union-symmetrized),
/// edge weight exp(-distance).
template <typename Scalar = double>
GeometricGraph<Scalar> generate_geometric_graph(int n, int k_neighbors, std::uint64_t seed) {
  if (n <= 0 || k_neighbors <= 0 || n <= k_neighbors) {
    throw InvalidConfiguration("generate_geometric_graph: need 0 < k_neighbors < n");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> positions(n, 2);
  for (int i = 0; i < n; ++i) {
    positions(i, 0) = static_cast<Scalar>(unit(rng));
    positions(i, 1) = static_cast<Scalar>(unit(rng));
  }
  return detail::knn_graph<Scalar>(std::move(positions), k_neighbors, seed);
}

/// Builds the k-NN graph from caller-supplied positions (no sampling).
template <typename Scalar>
GeometricGraph<Scalar> geometric_graph_from_positions(Eigen::Matrix<Scalar, Eigen::Dynamic, 2> positions,
                                                      int k_neighbors, std::uint64_t seed = 0) {
  return detail::knn_graph<Scalar>(std::move(positions), k_neighbors, seed);
}

/// Combinatorial Laplacian D - A.
template <typename Scalar>
SupportMatrix<Scalar> laplacian(const GeometricGraph<Scalar>& g) {
  MatrixX<Scalar> lap = -g.weights;
  lap.diagonal() = g.weights.rowwise().sum();
  MaskX mask = g.weights.array() != Scalar(0);
  return SupportMatrix<Scalar>(std::move(lap), std::move(mask));
}

/// Scales S so that its spectral radius is one.
template <typename Scalar>
SupportMatrix<Scalar> normalize_support(const SupportMatrix<Scalar>& s) {
  if (s.n() == 0 || s.entries().cwiseAbs().maxCoeff() == Scalar(0)) {
    throw DegenerateInput("normalize_support: all-zero support matrix");
  }
  const auto eig = jacobi_eigen(s.entries());
  const Scalar radius = eig.eigenvalues.cwiseAbs().maxCoeff();
  MatrixX<Scalar> scaled = s.entries() / radius;
  return SupportMatrix<Scalar>(std::move(scaled), s.mask());
}

/// One application of the shift: S x.
template <typename Scalar, typename Derived>
VectorX<Scalar> graph_shift(const SupportMatrix<Scalar>& s, const Eigen::MatrixBase<Derived>& x) {
  detail::require_same_size(s.n(), x.size(), "graph_shift");
  return s.entries() * x;
}

using Graph = GeometricGraph<double>;
using Support = SupportMatrix<double>;
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

// Plain-text graph format: "n k seed", n lines "x y", then "i j w" for each edge with i < j.
void write_graph(const Graph& g, const std::string& path);
Graph read_graph(const std::string& path);
std::string format_graph(const Graph& g);
Graph parse_graph(const std::string& text);

}  // namespace gdisc
