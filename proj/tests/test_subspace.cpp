#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "botl/subspace.hpp"
#include "helpers.hpp"

using namespace botl;
using namespace botl::subspace;
using test_helpers::axis_pcs;
using test_helpers::make_pcs;
using test_helpers::random_orthonormal;

namespace {

// Independent route to the retained component count: eigenvalues of the
// covariance via singular values of the centred data matrix.
int oracle_component_count(const Eigen::MatrixXd& window, double retention) {
  const Eigen::MatrixXd centred = window.rowwise() - window.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centred);
  Eigen::VectorXd lambda = svd.singularValues();
  lambda = lambda.array().square() / (window.rows() - 1);
  const double total = lambda.sum();
  double cumulative = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    cumulative += lambda(i);
    if (total - cumulative <= (1.0 - retention) * total) return i + 1;
  }
  return static_cast<int>(lambda.size());
}

}  // namespace

TEST_CASE("rank-1 window keeps a single component") {
  Eigen::VectorXd v(5);
  v << 1.0, -2.0, 0.5, 3.0, -1.0;
  Eigen::MatrixXd window(20, 5);
  for (int i = 0; i < 20; ++i) window.row(i) = (i - 9.5) * v.transpose();

  const ReducedPcs pcs = compute_reduced_pcs(window, 0.999);
  REQUIRE(pcs.rank() == 1);
  const Eigen::VectorXd unit = v / v.norm();
  REQUIRE(std::abs(std::abs(pcs.basis.col(0).dot(unit)) - 1.0) < 1e-9);
  REQUIRE(pcs.variance_captured == Catch::Approx(1.0));
}

TEST_CASE("isotropic covariance needs every component") {
  const int m = 6;
  Eigen::MatrixXd window(2 * m, m);
  window.setZero();
  for (int i = 0; i < m; ++i) {
    window(2 * i, i) = 1.0;
    window(2 * i + 1, i) = -1.0;
  }
  const ReducedPcs pcs = compute_reduced_pcs(window, 0.999);
  REQUIRE(pcs.rank() == m);
}

TEST_CASE("planted 3-dim subspace in 10-dim is recovered") {
  Rng rng(11);
  const Eigen::MatrixXd basis = random_orthonormal(rng, 10, 3);
  Eigen::MatrixXd window(100, 10);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd coeff(3);
    for (int j = 0; j < 3; ++j) coeff(j) = rng.normal();
    Eigen::VectorXd noise(10);
    for (int j = 0; j < 10; ++j) noise(j) = 1e-6 * rng.normal();
    window.row(i) = (basis * coeff + noise).transpose();
  }
  const ReducedPcs pcs = compute_reduced_pcs(window, 0.999);
  REQUIRE(pcs.rank() == 3);
  REQUIRE(pcs.rank() == oracle_component_count(window, 0.999));
}

TEST_CASE("projection preserves the retained variance fraction") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 4 + rng.uniform_int(6);
    const int n = m + 2 + rng.uniform_int(30);
    const Eigen::MatrixXd window = test_helpers::random_gaussian(rng, n, m);
    const double retention = 0.9 + 0.099 * rng.uniform();
    const ReducedPcs pcs = compute_reduced_pcs(window, retention);

    const Eigen::MatrixXd centred = window.rowwise() - window.colwise().mean();
    const double total = centred.squaredNorm();
    const double projected = (centred * pcs.basis).squaredNorm();
    REQUIRE(projected / total >= retention - 1e-12);
    REQUIRE(pcs.variance_captured >= retention - 1e-12);
  }
}

TEST_CASE("degenerate window is rejected") {
  Eigen::MatrixXd window(5, 4);
  for (int i = 0; i < 5; ++i) window.row(i) << 1.0, 2.0, 3.0, 4.0;
  REQUIRE_THROWS_AS(compute_reduced_pcs(window, 0.999), DegenerateWindow);
  const ReducedPcs fallback = degenerate_pcs(4, 5);
  REQUIRE(fallback.rank() == 1);
  REQUIRE(fallback.basis(0, 0) == 1.0);
}

TEST_CASE("principal angles on known configurations") {
  const ReducedPcs e1 = axis_pcs(2, 0);
  const ReducedPcs e2 = axis_pcs(2, 1);

  SECTION("identical subspaces") {
    const auto angles = principal_angles(e1, e1);
    REQUIRE(angles.size() == 1);
    REQUIRE(angles[0] == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("orthogonal subspaces") {
    const auto angles = principal_angles(e1, e2);
    REQUIRE(angles[0] == Catch::Approx(M_PI / 2));
  }
  SECTION("45 degree subspace") {
    Eigen::MatrixXd diag(2, 1);
    diag << std::cos(M_PI / 4), std::sin(M_PI / 4);
    const auto angles = principal_angles(e1, make_pcs(diag));
    REQUIRE(angles[0] == Catch::Approx(M_PI / 4));
  }
  SECTION("ambient dimension mismatch") {
    REQUIRE_THROWS_AS(principal_angles(e1, axis_pcs(3, 0)), DimensionMismatch);
  }
}

TEST_CASE("conceptual distance identities") {
  const ReducedPcs e1 = axis_pcs(2, 0);
  const ReducedPcs e2 = axis_pcs(2, 1);
  REQUIRE(conceptual_distance(e1, e1) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(conceptual_distance(e1, e2) == Catch::Approx(1.0));

  Eigen::MatrixXd diag(2, 1);
  diag << std::cos(M_PI / 4), std::sin(M_PI / 4);
  REQUIRE(conceptual_distance(e1, make_pcs(diag)) ==
          Catch::Approx(1.0 - std::sqrt(2.0) / 2.0).epsilon(1e-9));
}

TEST_CASE("distance properties over random subspace pairs") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const int m = 4 + rng.uniform_int(8);
    const int p = 1 + rng.uniform_int(m / 2);
    const int q = 1 + rng.uniform_int(m / 2);
    const ReducedPcs a = make_pcs(random_orthonormal(rng, m, p));
    const ReducedPcs b = make_pcs(random_orthonormal(rng, m, q));

    const auto angles = principal_angles(a, b);
    REQUIRE(static_cast<int>(angles.size()) == std::min(p, q));
    for (std::size_t i = 0; i < angles.size(); ++i) {
      REQUIRE(angles[i] >= 0.0);
      REQUIRE(angles[i] <= M_PI / 2 + 1e-12);
      if (i > 0) REQUIRE(angles[i] >= angles[i - 1] - 1e-12);
    }

    const double d_ab = conceptual_distance(a, b);
    const double d_ba = conceptual_distance(b, a);
    REQUIRE(d_ab >= 0.0);
    REQUIRE(d_ab <= 1.0);
    REQUIRE(d_ab == Catch::Approx(d_ba).margin(1e-12));

    // Same subspace under a rotated basis must give the same distance.
    const Eigen::MatrixXd rot = random_orthonormal(rng, q, q);
    const ReducedPcs b_rotated = make_pcs(b.basis * rot);
    REQUIRE(std::abs(conceptual_distance(a, b_rotated) - d_ab) < 1e-9);
  }
}

TEST_CASE("local scale picks the k-th nearest neighbour") {
  SECTION("two models force the clamp") {
    Eigen::MatrixXd d(2, 2);
    d << 0.0, 0.37, 0.37, 0.0;
    REQUIRE(local_scale(d, 0, 7) == Catch::Approx(0.37));
    REQUIRE(local_scale(d, 1, 1) == Catch::Approx(0.37));
  }
  SECTION("explicit neighbour rank") {
    Eigen::MatrixXd d(4, 4);
    d << 0.0, 0.1, 0.2, 0.3,
         0.1, 0.0, 0.5, 0.6,
         0.2, 0.5, 0.0, 0.7,
         0.3, 0.6, 0.7, 0.0;
    REQUIRE(local_scale(d, 0, 2) == Catch::Approx(0.2));
  }
  SECTION("k=7 over 8 models is the farthest neighbour") {
    Rng rng(23);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j) d(i, j) = d(j, i) = rng.uniform(0.05, 1.0);
    for (int i = 0; i < 8; ++i) {
      double max_d = 0.0;
      for (int j = 0; j < 8; ++j) max_d = std::max(max_d, d(i, j));
      REQUIRE(local_scale(d, i, 7) == Catch::Approx(max_d));
    }
  }
  SECTION("singleton registry") {
    Eigen::MatrixXd d(1, 1);
    d << 0.0;
    REQUIRE_THROWS_AS(local_scale(d, 0, 7), SingletonRegistry);
  }
}

TEST_CASE("affinity matrix values and limits") {
  SECTION("hand-computed entry") {
    // Distances chosen so both scales at the first neighbour are 0.5.
    Eigen::MatrixXd d(3, 3);
    d << 0.0, 0.5, 0.9,
         0.5, 0.0, 0.5,
         0.9, 0.5, 0.0;
    const AffinityMatrix a = build_affinity(d, 1);
    REQUIRE(a.entries(0, 1) == Catch::Approx(std::exp(-1.0)));
    REQUIRE(a.entries(0, 0) == 0.0);
    REQUIRE(a.entries(1, 1) == 0.0);
  }
  SECTION("duplicate subspaces keep affinity 1") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    const AffinityMatrix a = build_affinity(d, 7);
    REQUIRE(a.entries(0, 1) == 1.0);
  }
  SECTION("zero scale with non-zero distance gives 0") {
    // The first two models are duplicates, so both have scale 0.
    Eigen::MatrixXd d(3, 3);
    d << 0.0, 0.0, 0.6,
         0.0, 0.0, 0.6,
         0.6, 0.6, 0.0;
    const AffinityMatrix a = build_affinity(d, 1);
    REQUIRE(a.entries(0, 1) == 1.0);
    REQUIRE(a.entries(0, 2) == 0.0);
  }
  SECTION("single model yields the 1x1 zero matrix") {
    const AffinityMatrix a = build_affinity(Eigen::MatrixXd::Zero(1, 1), 7);
    REQUIRE(a.entries.rows() == 1);
    REQUIRE(a.entries(0, 0) == 0.0);
  }
  SECTION("symmetric with entries in [0,1] on random inputs") {
    Rng rng(29);
    for (int rep = 0; rep < 30; ++rep) {
      const int n = 2 + rng.uniform_int(10);
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = rng.uniform();
      const AffinityMatrix a = build_affinity(d, 7);
      for (int i = 0; i < n; ++i) {
        REQUIRE(a.entries(i, i) == 0.0);
        for (int j = 0; j < n; ++j) {
          REQUIRE(a.entries(i, j) == a.entries(j, i));
          REQUIRE(a.entries(i, j) >= 0.0);
          REQUIRE(a.entries(i, j) <= 1.0);
        }
      }
    }
  }
}

TEST_CASE("unit range scaling") {
  Eigen::MatrixXd w(3, 3);
  w << 0.0, 5.0, 2.0,
       1.0, 5.0, 4.0,
       2.0, 5.0, 6.0;
  const Eigen::MatrixXd s = scale_columns_unit_range(w);
  REQUIRE(s(0, 0) == 0.0);
  REQUIRE(s(2, 0) == 1.0);
  REQUIRE(s.col(1).isZero());
  REQUIRE(s(1, 2) == Catch::Approx(0.5));
}
