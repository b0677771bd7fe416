#pragma once

// Subspace similarity between trained models. A model's training window is
// summarised by the leading principal components of its (scaled, centred)
// joint feature+target matrix; pairs of models are compared via the principal
// angles between those component bases, giving a conceptual distance in [0,1]
// and a locally scaled Gaussian affinity.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <vector>

#include "botl/errors.hpp"

namespace botl::subspace {

// Orthonormal basis of the leading principal components of one training
// window. `basis` is ambient_dim x rank with orthonormal columns.
struct ReducedPcs {
  Eigen::MatrixXd basis;
  double variance_captured = 1.0;
  int source_rows = 0;

  int ambient_dim() const { return static_cast<int>(basis.rows()); }
  int rank() const { return static_cast<int>(basis.cols()); }
};

// Pairwise conceptual distances with the registry ordering they refer to.
template <typename Id>
struct DistanceMatrix {
  Eigen::MatrixXd entries;
  std::vector<Id> model_ids;
};

struct AffinityMatrix {
  Eigen::MatrixXd entries;
  int scaling_k = 7;
};

// Rescales every column to [0,1] using its own min/max. Constant columns
// collapse to zero.
inline Eigen::MatrixXd scale_columns_unit_range(const Eigen::MatrixXd& w) {
  Eigen::MatrixXd out(w.rows(), w.cols());
  for (int c = 0; c < w.cols(); ++c) {
    const double lo = w.col(c).minCoeff();
    const double hi = w.col(c).maxCoeff();
    if (hi - lo > 0.0) {
      out.col(c) = (w.col(c).array() - lo) / (hi - lo);
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

// Stand-in basis for a window with zero covariance: a single unit vector
// along the first coordinate.
inline ReducedPcs degenerate_pcs(int ambient_dim, int source_rows = 0) {
  ReducedPcs pcs;
  pcs.basis = Eigen::MatrixXd::Zero(ambient_dim, 1);
  pcs.basis(0, 0) = 1.0;
  pcs.variance_captured = 1.0;
  pcs.source_rows = source_rows;
  return pcs;
}

// Leading principal components of a window of N joint rows in m dimensions.
// Columns are mean-centred here; the retained count p is the smallest number
// of components whose variance fraction reaches `retention`.
inline ReducedPcs compute_reduced_pcs(const Eigen::MatrixXd& window,
                                      double retention = 0.999) {
  const int n = static_cast<int>(window.rows());
  const int m = static_cast<int>(window.cols());
  if (n < 2) throw DimensionMismatch("need at least 2 window rows");
  if (m < 2) throw DimensionMismatch("need at least 2 columns");
  if (!(retention > 0.0 && retention <= 1.0))
    throw DimensionMismatch("retention must be in (0,1]");

  const Eigen::RowVectorXd mean = window.colwise().mean();
  const Eigen::MatrixXd centred = window.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centred.transpose() * centred / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw DegenerateWindow("eigendecomposition failed");

  // Ascending in Eigen; flip to descending and floor tiny negatives.
  Eigen::VectorXd values = eig.eigenvalues().reverse();
  values = values.cwiseMax(0.0);
  const double total = values.sum();
  if (total <= 0.0) throw DegenerateWindow("window has zero covariance");

  double cumulative = 0.0;
  int p = m;
  for (int i = 0; i < m; ++i) {
    cumulative += values(i);
    if (total - cumulative <= (1.0 - retention) * total) {
      p = i + 1;
      break;
    }
  }
  p = std::max(1, std::min({p, n, m}));

  ReducedPcs pcs;
  pcs.basis.resize(m, p);
  for (int i = 0; i < p; ++i) pcs.basis.col(i) = eig.eigenvectors().col(m - 1 - i);
  pcs.variance_captured = values.head(p).sum() / total;
  pcs.source_rows = n;
  return pcs;
}

namespace detail {

// Singular values of basis_a' * basis_b, clamped into [0,1] (floating point
// can exceed 1 by ~1e-15, which arccos rejects). Descending order.
inline Eigen::VectorXd basis_product_singulars(const ReducedPcs& a,
                                               const ReducedPcs& b) {
  if (a.ambient_dim() != b.ambient_dim())
    throw DimensionMismatch("principal angle bases have different ambient dimensions");
  const Eigen::MatrixXd product = a.basis.transpose() * b.basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(product);
  Eigen::VectorXd s = svd.singularValues();
  return s.cwiseMin(1.0).cwiseMax(0.0);
}

}  // namespace detail

// Principal angles between the two subspaces, ascending, in [0, pi/2].
inline std::vector<double> principal_angles(const ReducedPcs& a,
                                            const ReducedPcs& b) {
  const Eigen::VectorXd s = detail::basis_product_singulars(a, b);
  std::vector<double> angles(s.size());
  for (int i = 0; i < s.size(); ++i) angles[i] = std::acos(s(i));
  return angles;
}

// Mean (1 - cos theta) over the principal angles: 0 for identical subspaces,
// 1 for fully orthogonal ones.
inline double conceptual_distance(const ReducedPcs& a, const ReducedPcs& b) {
  const Eigen::VectorXd s = detail::basis_product_singulars(a, b);
  const double d = 1.0 - s.mean();
  return std::clamp(d, 0.0, 1.0);
}

// Local scaling bandwidth: distance from model i to its k-th nearest
// neighbour, with k clamped to n-1 when the registry is small.
inline double local_scale(const Eigen::MatrixXd& distances, int model_index,
                          int k) {
  const int n = static_cast<int>(distances.rows());
  if (n < 2) throw SingletonRegistry("local scale needs at least 2 models");
  std::vector<double> row;
  row.reserve(n - 1);
  for (int j = 0; j < n; ++j) {
    if (j != model_index) row.push_back(distances(model_index, j));
  }
  std::sort(row.begin(), row.end());
  const int k_eff = std::min(k, n - 1);
  return row[k_eff - 1];
}

// Locally scaled Gaussian affinity: exp(-d^2 / (sigma_i sigma_j)) off the
// diagonal, 0 on it. Duplicate subspaces (d = 0) get affinity 1 even when a
// scale degenerates to 0; distinct models with zero scales get affinity 0.
inline AffinityMatrix build_affinity(const Eigen::MatrixXd& distances,
                                     int k = 7) {
  const int n = static_cast<int>(distances.rows());
  AffinityMatrix affinity;
  affinity.scaling_k = k;
  affinity.entries = Eigen::MatrixXd::Zero(n, n);
  if (n < 2) return affinity;

  Eigen::VectorXd sigma(n);
  for (int i = 0; i < n; ++i) sigma(i) = local_scale(distances, i, k);

  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = distances(i, j);
      double a;
      if (d == 0.0) {
        a = 1.0;
      } else if (sigma(i) * sigma(j) == 0.0) {
        a = 0.0;
      } else {
        a = std::exp(-d * d / (sigma(i) * sigma(j)));
      }
      affinity.entries(i, j) = a;
      affinity.entries(j, i) = a;
    }
  }
  return affinity;
}

}  // namespace botl::subspace
