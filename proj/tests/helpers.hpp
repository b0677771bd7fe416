#pragma once

// Shared test utilities: random orthonormal bases, adjusted Rand index, and
// planted block-diagonal affinity matrices for clustering oracles.

#include <Eigen/Dense>
#include <Eigen/QR>
#include <map>
#include <utility>
#include <vector>

#include "botl/rng.hpp"
#include "botl/subspace.hpp"

namespace test_helpers {

inline Eigen::MatrixXd random_gaussian(botl::Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Orthonormal basis via thin QR of a Gaussian matrix.
inline Eigen::MatrixXd random_orthonormal(botl::Rng& rng, int rows, int cols) {
  const Eigen::MatrixXd g = random_gaussian(rng, rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  return q;
}

inline botl::subspace::ReducedPcs make_pcs(Eigen::MatrixXd basis) {
  botl::subspace::ReducedPcs pcs;
  pcs.basis = std::move(basis);
  pcs.source_rows = static_cast<int>(pcs.basis.rows());
  return pcs;
}

// Single unit vector along the given coordinate axis.
inline botl::subspace::ReducedPcs axis_pcs(int ambient, int axis) {
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(ambient, 1);
  basis(axis, 0) = 1.0;
  return make_pcs(basis);
}

// Adjusted Rand index between two labelings.
inline double adjusted_rand_index(const std::vector<int>& a,
                                  const std::vector<int>& b) {
  const int n = static_cast<int>(a.size());
  std::map<std::pair<int, int>, long> contingency;
  std::map<int, long> rows, cols;
  for (int i = 0; i < n; ++i) {
    ++contingency[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  const auto choose2 = [](long x) { return x * (x - 1) / 2.0; };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : contingency) sum_cells += choose2(count);
  for (const auto& [key, count] : rows) sum_rows += choose2(count);
  for (const auto& [key, count] : cols) sum_cols += choose2(count);
  const double total = choose2(n);
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (sum_cells - expected) / (max_index - expected);
}

// Block-diagonal affinity with strong within-block and weak cross-block
// entries. Returns the planted labels.
inline std::vector<int> planted_affinity(botl::Rng& rng,
                                         const std::vector<int>& block_sizes,
                                         Eigen::MatrixXd& affinity,
                                         double within_lo = 0.75,
                                         double cross_hi = 0.05) {
  int n = 0;
  for (int s : block_sizes) n += s;
  std::vector<int> labels(n);
  int offset = 0;
  for (int b = 0; b < static_cast<int>(block_sizes.size()); ++b) {
    for (int i = 0; i < block_sizes[b]; ++i) labels[offset + i] = b;
    offset += block_sizes[b];
  }
  affinity = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = labels[i] == labels[j] ? rng.uniform(within_lo, 1.0)
                                              : rng.uniform(0.0, cross_hi);
      affinity(i, j) = v;
      affinity(j, i) = v;
    }
  }
  return labels;
}

}  // namespace test_helpers
