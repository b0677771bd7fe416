#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "botl/clustering.hpp"
#include "helpers.hpp"

using namespace botl;
using namespace botl::clustering;
using test_helpers::adjusted_rand_index;
using test_helpers::planted_affinity;

TEST_CASE("normalized affinity") {
  SECTION("unit degrees") {
    Eigen::MatrixXd a(2, 2);
    a << 0.0, 1.0, 1.0, 0.0;
    const Eigen::MatrixXd l = normalized_affinity(a);
    REQUIRE(l(0, 1) == Catch::Approx(1.0));
    REQUIRE(l(0, 0) == 0.0);
  }
  SECTION("all-zero input stays zero") {
    const Eigen::MatrixXd l = normalized_affinity(Eigen::MatrixXd::Zero(3, 3));
    REQUIRE(l.isZero());
  }
  SECTION("hand-normalised 3x3") {
    Eigen::MatrixXd a(3, 3);
    a << 0.0, 1.0, 0.5,
         1.0, 0.0, 0.0,
         0.5, 0.0, 0.0;
    const Eigen::MatrixXd l = normalized_affinity(a);
    // degrees: 1.5, 1.0, 0.5
    REQUIRE(l(0, 1) == Catch::Approx(1.0 / std::sqrt(1.5)));
    REQUIRE(l(0, 2) == Catch::Approx(0.5 / std::sqrt(0.75)));
    REQUIRE(l(1, 2) == Catch::Approx(0.0));
  }
  SECTION("scaling the affinity leaves the normalisation unchanged") {
    Rng rng(5);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) a(i, j) = a(j, i) = rng.uniform();
    const Eigen::MatrixXd l1 = normalized_affinity(a);
    const Eigen::MatrixXd l2 = normalized_affinity(0.37 * a);
    REQUIRE((l1 - l2).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("degenerate registry sizes") {
  SECTION("single model") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 1);
    const ClusterAssignment c = stsc_cluster(a);
    REQUIRE(c.num_clusters == 1);
    REQUIRE(c.labels == std::vector<int>{0});
  }
  SECTION("two models split at exp(-1)") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 1) = a(1, 0) = 0.5;  // above exp(-1) ~ 0.368
    REQUIRE(stsc_cluster(a).num_clusters == 1);
    a(0, 1) = a(1, 0) = 0.2;
    const ClusterAssignment c = stsc_cluster(a);
    REQUIRE(c.num_clusters == 2);
    REQUIRE(c.labels[0] != c.labels[1]);
  }
}

TEST_CASE("planted blocks are recovered") {
  SECTION("two blocks of four") {
    Rng rng(41);
    Eigen::MatrixXd a;
    const std::vector<int> truth = planted_affinity(rng, {4, 4}, a);
    const ClusterAssignment c = stsc_cluster(a);
    REQUIRE(c.num_clusters == 2);
    REQUIRE(adjusted_rand_index(c.labels, truth) == Catch::Approx(1.0));
    // Oracle: every within-block affinity exceeds every cross-block one.
    double min_within = 1.0, max_cross = 0.0;
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j) {
        if (truth[i] == truth[j]) min_within = std::min(min_within, a(i, j));
        else max_cross = std::max(max_cross, a(i, j));
      }
    REQUIRE(min_within > max_cross);
  }
  SECTION("three blocks 3/3/4") {
    Rng rng(43);
    Eigen::MatrixXd a;
    const std::vector<int> truth = planted_affinity(rng, {3, 3, 4}, a);
    const ClusterAssignment c = stsc_cluster(a);
    REQUIRE(c.num_clusters == 3);
    REQUIRE(adjusted_rand_index(c.labels, truth) == Catch::Approx(1.0));
  }
}

TEST_CASE("labels are invariant under permutation up to renaming") {
  Rng rng(47);
  Eigen::MatrixXd a;
  const std::vector<int> truth = planted_affinity(rng, {4, 3, 5}, a);
  const int n = static_cast<int>(truth.size());
  const ClusterAssignment base = stsc_cluster(a);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  // Deterministic shuffle.
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);

  Eigen::MatrixXd permuted(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) permuted(i, j) = a(perm[i], perm[j]);
  const ClusterAssignment shuffled = stsc_cluster(permuted);

  std::vector<int> base_permuted(n);
  for (int i = 0; i < n; ++i) base_permuted[i] = base.labels[perm[i]];
  REQUIRE(adjusted_rand_index(shuffled.labels, base_permuted) == Catch::Approx(1.0));
}

TEST_CASE("labels survive affinity rescaling for n >= 3") {
  Rng rng(53);
  Eigen::MatrixXd a;
  planted_affinity(rng, {3, 4}, a);
  const ClusterAssignment base = stsc_cluster(a);
  for (double scale : {0.9, 0.5, 0.1}) {
    const ClusterAssignment scaled = stsc_cluster(Eigen::MatrixXd(scale * a));
    REQUIRE(adjusted_rand_index(scaled.labels, base.labels) == Catch::Approx(1.0));
  }
}

TEST_CASE("max_clusters caps the choice") {
  Rng rng(59);
  Eigen::MatrixXd a;
  planted_affinity(rng, {3, 3, 3, 3}, a);
  const ClusterAssignment c = stsc_cluster(a, 2);
  REQUIRE(c.num_clusters <= 2);
}

TEST_CASE("rotation cost of aligned blocks stays near the row count") {
  Rng rng(61);
  Eigen::MatrixXd a;
  planted_affinity(rng, {5, 5}, a, 0.9, 0.02);
  const ClusterAssignment c = stsc_cluster(a);
  REQUIRE(c.rotation_cost >= 10.0 - 1e-9);
  REQUIRE(c.rotation_cost < 10.0 * 1.2);
}
