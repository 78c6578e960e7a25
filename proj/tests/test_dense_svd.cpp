#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "ipjdsvd/dense_svd.hpp"
#include "test_util.hpp"

using namespace ipjdsvd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Independent oracle route: singular values as eigenvalue square roots of
// H^T H from Eigen's symmetric eigensolver.
VectorXd svals_by_gram_eigensolve(const MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H.transpose() * H);
  VectorXd ev = es.eigenvalues();
  VectorXd s(ev.size());
  for (int i = 0; i < ev.size(); ++i) s[i] = std::sqrt(std::max(0.0, ev[i]));
  std::sort(s.data(), s.data() + s.size());
  return s;
}

void check_invariants(const MatrixXd& H, double tau, const SmallSvd& svd) {
  const int k = static_cast<int>(H.cols());
  const double scale = std::max(1.0, H.norm());
  REQUIRE(svd.theta.size() == k);
  for (int i = 0; i < k; ++i) {
    CHECK(svd.theta[i] >= 0.0);
    CHECK((H * svd.D.col(i) - svd.theta[i] * svd.C.col(i)).norm() <= 1e-12 * scale);
    CHECK((H.transpose() * svd.C.col(i) - svd.theta[i] * svd.D.col(i)).norm() <=
          1e-12 * scale);
  }
  CHECK((svd.C.transpose() * svd.C - MatrixXd::Identity(k, k)).norm() <= 1e-12);
  CHECK((svd.D.transpose() * svd.D - MatrixXd::Identity(k, k)).norm() <= 1e-12);
  for (int i = 0; i + 1 < k; ++i)
    CHECK(std::abs(svd.theta[i] - tau) <= std::abs(svd.theta[i + 1] - tau) + 1e-15);
  // the ordering is a permutation
  std::vector<int> seen(k, 0);
  for (int p : svd.perm) {
    REQUIRE(p >= 0);
    REQUIRE(p < k);
    ++seen[p];
  }
  CHECK(*std::min_element(seen.begin(), seen.end()) == 1);
  // reconstruction
  MatrixXd rebuilt = MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    rebuilt += svd.theta[i] * svd.C.col(i) * svd.D.col(i).transpose();
  CHECK((rebuilt - H).norm() <= 1e-11 * scale);
}

}  // namespace

TEST_CASE("diagonal matrix: values ordered by distance to tau, coordinate factors") {
  MatrixXd H = Eigen::Vector3d(3, 1, 2).asDiagonal();
  SmallSvd svd = small_svd(H, 0.0);
  CHECK(svd.theta[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(svd.theta[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(svd.theta[2] == doctest::Approx(3.0).epsilon(1e-14));
  // factors are signed coordinate vectors
  CHECK(std::abs(svd.C.col(0)[1]) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(svd.D.col(0)[1]) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(svd.C.col(2)[0]) == doctest::Approx(1.0).epsilon(1e-14));
  check_invariants(H, 0.0, svd);
}

TEST_CASE("1x1 negative entry: value is positive, sign absorbed by the left factor") {
  MatrixXd H(1, 1);
  H << -5.0;
  SmallSvd svd = small_svd(H, 0.0);
  CHECK(svd.theta[0] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(svd.C(0, 0) * svd.D(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  check_invariants(H, 0.0, svd);
}

TEST_CASE("random 6x6: values match the Gram eigensolve oracle") {
  testutil::Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    MatrixXd H = rng.matrix(6, 6);
    SmallSvd svd = small_svd(H, 0.0);
    VectorXd want = svals_by_gram_eigensolve(H);
    VectorXd got = svd.theta;  // tau = 0 sorts ascending by value
    std::sort(got.data(), got.data() + got.size());
    for (int i = 0; i < 6; ++i)
      CHECK(std::abs(got[i] - want[i]) <= 1e-10 * std::max(1.0, want[5]));
    check_invariants(H, 0.0, svd);
  }
}

TEST_CASE("invariants hold across sizes, targets and scales") {
  testutil::Rng rng(32);
  for (int t = 0; t < 12; ++t) {
    int k = 1 + rng.index(30);
    MatrixXd H = rng.matrix(k, k) * std::pow(10.0, rng.index(5) - 2);
    double tau = std::abs(rng.gaussian());
    SmallSvd svd = small_svd(H, tau);
    check_invariants(H, tau, svd);
  }
}

TEST_CASE("ties in distance break by ascending value") {
  MatrixXd H = Eigen::Vector2d(1.0, 3.0).asDiagonal();
  SmallSvd svd = small_svd(H, 2.0);  // both at distance 1
  CHECK(svd.theta[0] == doctest::Approx(1.0));
  CHECK(svd.theta[1] == doctest::Approx(3.0));
}

TEST_CASE("repeated values order deterministically and repeatably") {
  MatrixXd H = Eigen::Vector3d(2.0, 2.0, 2.0).asDiagonal();
  SmallSvd a = small_svd(H, 0.0);
  SmallSvd b = small_svd(H, 0.0);
  CHECK(a.perm == b.perm);
  check_invariants(H, 0.0, a);
}

TEST_CASE("rank-deficient and zero matrices get orthonormal completions") {
  MatrixXd H = Eigen::Vector3d(1.0, 0.0, 2.0).asDiagonal();
  SmallSvd svd = small_svd(H, 0.0);
  CHECK(svd.theta[0] <= 1e-14);
  check_invariants(H, 0.0, svd);

  MatrixXd Z = MatrixXd::Zero(4, 4);
  SmallSvd zsvd = small_svd(Z, 1.0);
  CHECK(zsvd.theta.maxCoeff() <= 1e-14);
  check_invariants(Z, 1.0, zsvd);

  // structurally rank-1
  testutil::Rng rng(33);
  VectorXd a = rng.vector(5), b = rng.vector(5);
  MatrixXd R1 = a * b.transpose();
  SmallSvd r1 = small_svd(R1, 0.0);
  check_invariants(R1, 0.0, r1);
  CHECK(r1.theta[4] == doctest::Approx(a.norm() * b.norm()).epsilon(1e-12));
}

TEST_CASE("non-finite input is rejected") {
  MatrixXd H = MatrixXd::Ones(2, 2);
  H(1, 1) = std::nan("");
  CHECK_THROWS_AS(small_svd(H, 0.0), std::invalid_argument);
}

TEST_CASE("orthonormalize_against: already orthogonal, contained, exact projection") {
  VectorXd e1 = VectorXd::Unit(3, 0), e2 = VectorXd::Unit(3, 1);
  MatrixXd Q(3, 1);
  Q.col(0) = e2;
  auto r = orthonormalize_against(e1, Q);
  REQUIRE(r.has_value());
  CHECK((*r - e1).norm() <= 1e-15);

  MatrixXd Q1(3, 1);
  Q1.col(0) = e1;
  CHECK(!orthonormalize_against(e1, Q1).has_value());

  VectorXd v = e1 + e2;
  auto s = orthonormalize_against(v, Q1);
  REQUIRE(s.has_value());
  CHECK((*s - e2).norm() <= 1e-14);
}

TEST_CASE("orthonormalize_against yields unit vectors orthogonal to the block") {
  testutil::Rng rng(34);
  int n = 200, k = 20;
  MatrixXd Q = testutil::random_orthonormal(rng, n, k);
  for (int t = 0; t < 8; ++t) {
    VectorXd v = rng.vector(n);
    auto r = orthonormalize_against(v, Q);
    REQUIRE(r.has_value());
    CHECK(std::abs(r->norm() - 1.0) <= 1e-13);
    CHECK((Q.transpose() * *r).cwiseAbs().maxCoeff() <= 1e-12);
    // re-orthonormalization changes nothing
    auto r2 = orthonormalize_against(*r, Q);
    REQUIRE(r2.has_value());
    CHECK((*r2 - *r).norm() <= 1e-13);
  }
}

TEST_CASE("vectors numerically inside the span are dropped") {
  testutil::Rng rng(35);
  int n = 120, k = 8;
  MatrixXd Q = testutil::random_orthonormal(rng, n, k);
  VectorXd inside = Q * rng.vector(k);
  CHECK(!orthonormalize_against(inside, Q).has_value());
  VectorXd nearly = inside + 1e-12 * rng.vector(n);
  CHECK(!orthonormalize_against(nearly, Q, 1e-10).has_value());
}

TEST_CASE("empty block only normalizes") {
  VectorXd v(3);
  v << 3, 0, 4;
  MatrixXd Q(3, 0);
  auto r = orthonormalize_against(v, Q);
  REQUIRE(r.has_value());
  CHECK((*r * 5.0 - v).norm() <= 1e-14);
  CHECK(!orthonormalize_against(VectorXd::Zero(3), Q).has_value());
}
