#pragma once

// Self-tuning spectral clustering over a model affinity matrix. The cluster
// count is chosen automatically: for each candidate count C the top-C
// eigenvectors of the normalised affinity are rotated towards an axis-aligned
// indicator structure with Givens rotations; among the counts whose alignment
// cost reaches the shared plateau, the labelling with the highest graph
// modularity is kept.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "botl/subspace.hpp"

namespace botl::clustering {

struct ClusterAssignment {
  std::vector<int> labels;   // in [0, num_clusters)
  int num_clusters = 1;
  double rotation_cost = 0.0;
};

// Symmetric normalisation D^{-1/2} A D^{-1/2}; zero-degree rows stay zero.
inline Eigen::MatrixXd normalized_affinity(const Eigen::MatrixXd& affinity) {
  const int n = static_cast<int>(affinity.rows());
  Eigen::VectorXd inv_sqrt_degree(n);
  for (int i = 0; i < n; ++i) {
    const double degree = affinity.row(i).sum();
    inv_sqrt_degree(i) = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
  }
  return inv_sqrt_degree.asDiagonal() * affinity * inv_sqrt_degree.asDiagonal();
}

namespace detail {

// Rotation plane (i,j) list for C dimensions, ordered so the planes for C
// dimensions are a prefix of those for C+1. That lets each candidate count
// reuse the previous count's angles as a warm start.
inline std::vector<std::pair<int, int>> rotation_planes(int c) {
  std::vector<std::pair<int, int>> planes;
  for (int j = 1; j < c; ++j)
    for (int i = 0; i < j; ++i) planes.emplace_back(i, j);
  return planes;
}

inline Eigen::MatrixXd givens(int c, int i, int j, double theta) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(c, c);
  const double cs = std::cos(theta), sn = std::sin(theta);
  g(i, i) = cs;
  g(j, j) = cs;
  g(i, j) = -sn;
  g(j, i) = sn;
  return g;
}

inline Eigen::MatrixXd rotation_from_angles(
    const std::vector<double>& angles,
    const std::vector<std::pair<int, int>>& planes, int c) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(c, c);
  for (std::size_t k = 0; k < planes.size(); ++k)
    r *= givens(c, planes[k].first, planes[k].second, angles[k]);
  return r;
}

constexpr double kRowFloor = 1e-12;

// Alignment cost J = sum_ij Z_ij^2 / m_i^2 with m_i the largest |Z_ij| in
// row i. Minimum n when each row has a single non-zero entry.
inline double alignment_cost(const Eigen::MatrixXd& z) {
  double cost = 0.0;
  for (int i = 0; i < z.rows(); ++i) {
    const double m = std::max(z.row(i).cwiseAbs().maxCoeff(), kRowFloor);
    cost += z.row(i).squaredNorm() / (m * m);
  }
  return cost;
}

// Analytic gradient of the alignment cost with respect to every rotation
// angle. dZ/dtheta_k = X * (prefix_k * dG_k * suffix_k).
inline Eigen::VectorXd alignment_gradient(
    const Eigen::MatrixXd& x, const std::vector<double>& angles,
    const std::vector<std::pair<int, int>>& planes) {
  const int c = static_cast<int>(x.cols());
  const int num_angles = static_cast<int>(planes.size());

  std::vector<Eigen::MatrixXd> prefix(num_angles + 1);
  std::vector<Eigen::MatrixXd> suffix(num_angles + 1);
  prefix[0] = Eigen::MatrixXd::Identity(c, c);
  suffix[num_angles] = Eigen::MatrixXd::Identity(c, c);
  for (int k = 0; k < num_angles; ++k)
    prefix[k + 1] = prefix[k] * givens(c, planes[k].first, planes[k].second, angles[k]);
  for (int k = num_angles - 1; k >= 0; --k)
    suffix[k] = givens(c, planes[k].first, planes[k].second, angles[k]) * suffix[k + 1];

  const Eigen::MatrixXd z = x * prefix[num_angles];
  const int n = static_cast<int>(x.rows());
  Eigen::VectorXd max_abs(n);
  Eigen::VectorXi max_idx(n);
  for (int i = 0; i < n; ++i) {
    int idx = 0;
    const double m = z.row(i).cwiseAbs().maxCoeff(&idx);
    max_abs(i) = std::max(m, kRowFloor);
    max_idx(i) = idx;
  }

  Eigen::VectorXd grad(num_angles);
  for (int k = 0; k < num_angles; ++k) {
    const auto [pi, pj] = planes[k];
    Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(c, c);
    const double cs = std::cos(angles[k]), sn = std::sin(angles[k]);
    dg(pi, pi) = -sn;
    dg(pj, pj) = -sn;
    dg(pi, pj) = -cs;
    dg(pj, pi) = cs;
    const Eigen::MatrixXd v = x * (prefix[k] * dg * suffix[k + 1]);

    double g = 0.0;
    for (int i = 0; i < n; ++i) {
      const double m2 = max_abs(i) * max_abs(i);
      const double row_sq = z.row(i).squaredNorm();
      g += 2.0 * z.row(i).dot(v.row(i)) / m2;
      g -= 2.0 * row_sq * z(i, max_idx(i)) * v(i, max_idx(i)) / (m2 * m2);
    }
    grad(k) = g;
  }
  return grad;
}

struct RotationResult {
  std::vector<double> angles;
  Eigen::MatrixXd z;
  double cost = 0.0;
  bool converged = false;
};

// Gradient descent over the Givens angles with backtracking from the base
// step. Non-convergence within the iteration cap is reported, not thrown;
// callers fall back to unrotated assignments.
inline RotationResult rotate_to_alignment(const Eigen::MatrixXd& x,
                                          std::vector<double> angles,
                                          int max_iterations = 200,
                                          double base_step = 0.01) {
  const int c = static_cast<int>(x.cols());
  const auto planes = rotation_planes(c);
  angles.resize(planes.size(), 0.0);

  RotationResult result;
  result.z = x * rotation_from_angles(angles, planes, c);
  result.cost = alignment_cost(result.z);
  result.angles = angles;
  result.converged = true;

  double step = base_step;
  for (int iter = 0; iter < max_iterations; ++iter) {
    if (planes.empty()) break;
    const Eigen::VectorXd grad = alignment_gradient(x, result.angles, planes);
    if (grad.norm() < 1e-9) break;

    bool accepted = false;
    double trial_cost = result.cost;
    std::vector<double> trial = result.angles;
    while (step > 1e-12) {
      for (std::size_t k = 0; k < planes.size(); ++k)
        trial[k] = result.angles[k] - step * grad(k);
      const Eigen::MatrixXd z = x * rotation_from_angles(trial, planes, c);
      trial_cost = alignment_cost(z);
      if (trial_cost < result.cost - 1e-13) {
        accepted = true;
        result.angles = trial;
        result.z = z;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent direction left: local minimum

    const double improvement = result.cost - trial_cost;
    result.cost = trial_cost;
    step = std::min(step * 2.0, 0.5);
    if (improvement < 1e-9 * std::max(1.0, result.cost)) break;
    if (iter == max_iterations - 1) result.converged = false;
  }
  return result;
}

inline std::vector<int> argmax_labels(const Eigen::MatrixXd& z) {
  std::vector<int> labels(z.rows());
  for (int i = 0; i < z.rows(); ++i) {
    int idx = 0;
    z.row(i).cwiseAbs().maxCoeff(&idx);
    labels[i] = idx;
  }
  return labels;
}

// Renumber labels to consecutive ids in order of first appearance and drop
// empty clusters.
inline void compact_labels(std::vector<int>& labels, int& num_clusters) {
  std::map<int, int> remap;
  for (int& label : labels) {
    auto [it, inserted] = remap.emplace(label, static_cast<int>(remap.size()));
    label = it->second;
  }
  num_clusters = static_cast<int>(remap.size());
}

// Newman modularity of a labelling under the affinity graph.
inline double modularity(const Eigen::MatrixXd& affinity,
                         const std::vector<int>& labels) {
  const double total = affinity.sum();
  if (total <= 0.0) return 0.0;
  const int n = static_cast<int>(affinity.rows());
  Eigen::VectorXd degree(n);
  for (int i = 0; i < n; ++i) degree(i) = affinity.row(i).sum();
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || labels[i] != labels[j]) continue;
      q += affinity(i, j) - degree(i) * degree(j) / total;
    }
  }
  return q / total;
}

}  // namespace detail

// Cluster registry models from their affinity matrix. max_clusters <= 0
// defaults to min(n, 10). One- and two-model registries are handled directly:
// with two models a single cluster is declared when their affinity is at
// least exp(-1), the value at which distance equals the local scale.
inline ClusterAssignment stsc_cluster(const Eigen::MatrixXd& affinity,
                                      int max_clusters = 0) {
  const int n = static_cast<int>(affinity.rows());
  ClusterAssignment assignment;
  if (n <= 0) return assignment;
  if (max_clusters <= 0) max_clusters = std::min(n, 10);
  max_clusters = std::min(max_clusters, n);

  if (n == 1) {
    assignment.labels = {0};
    assignment.num_clusters = 1;
    return assignment;
  }
  if (n == 2 || max_clusters < 2) {
    const bool together = n == 2 && affinity(0, 1) >= std::exp(-1.0);
    if (together || max_clusters < 2) {
      assignment.labels.assign(n, 0);
      assignment.num_clusters = 1;
    } else {
      assignment.labels = {0, 1};
      assignment.num_clusters = 2;
    }
    return assignment;
  }

  const Eigen::MatrixXd normalised = normalized_affinity(affinity);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalised);

  struct Candidate {
    detail::RotationResult rotation;
    Eigen::MatrixXd eigenvectors;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(max_clusters - 1);

  std::vector<double> warm_angles;
  for (int c = 2; c <= max_clusters; ++c) {
    Eigen::MatrixXd x(n, c);
    for (int i = 0; i < c; ++i) x.col(i) = eig.eigenvectors().col(n - 1 - i);
    Candidate candidate;
    candidate.eigenvectors = x;
    // Multi-start: the zero/warm start can sit on a symmetric saddle, so the
    // new angles are also tried at +-pi/8.
    const std::size_t num_angles = detail::rotation_planes(c).size();
    for (const double offset : {0.0, M_PI / 8.0, -M_PI / 8.0}) {
      std::vector<double> init = warm_angles;
      init.resize(num_angles, offset);
      detail::RotationResult rot = detail::rotate_to_alignment(x, init);
      if (candidate.rotation.z.size() == 0 ||
          rot.cost < candidate.rotation.cost) {
        candidate.rotation = std::move(rot);
      }
    }
    warm_angles = candidate.rotation.angles;
    candidates.push_back(std::move(candidate));
  }

  double min_cost = candidates.front().rotation.cost;
  for (const auto& candidate : candidates)
    min_cost = std::min(min_cost, candidate.rotation.cost);

  // The alignment cost reaches its floor at the structural cluster count but
  // also at over- and under-split counts (extra eigenvectors slice blocks
  // into alignable singletons; a missing eigenvector can hide one block
  // split). Among the plateau candidates, the labelling that best matches the
  // affinity graph's community structure decides.
  int chosen = 0;
  double best_modularity = -2.0;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    if (candidates[i].rotation.cost > min_cost + 0.005 * min_cost) continue;
    const std::vector<int> labels =
        detail::argmax_labels(candidates[i].rotation.z);
    const double q = detail::modularity(affinity, labels);
    if (q > best_modularity + 1e-12) {
      best_modularity = q;
      chosen = i;
    }
  }

  if (!candidates[chosen].rotation.converged) {
    // Rotation ran out of iterations: take the strictly best cost and label
    // from the unrotated eigenvectors.
    int best = 0;
    for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
      if (candidates[i].rotation.cost < candidates[best].rotation.cost) best = i;
    }
    assignment.labels = detail::argmax_labels(candidates[best].eigenvectors);
    assignment.rotation_cost = candidates[best].rotation.cost;
  } else {
    assignment.labels = detail::argmax_labels(candidates[chosen].rotation.z);
    assignment.rotation_cost = candidates[chosen].rotation.cost;
  }
  detail::compact_labels(assignment.labels, assignment.num_clusters);
  return assignment;
}

inline ClusterAssignment stsc_cluster(const subspace::AffinityMatrix& affinity,
                                      int max_clusters = 0) {
  return stsc_cluster(affinity.entries, max_clusters);
}

}  // namespace botl::clustering
