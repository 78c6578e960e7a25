#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ipjdsvd/augmented_op.hpp"
#include "ipjdsvd/dense_svd.hpp"
#include "ipjdsvd/minres.hpp"
#include "ipjdsvd/sparse_matrix.hpp"
#include "test_util.hpp"

using namespace ipjdsvd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd diag_vector(std::initializer_list<double> v) {
  VectorXd d(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) d[i++] = x;
  return d;
}

DenseOperator diag_op(const VectorXd& d) {
  return DenseOperator(MatrixXd(d.asDiagonal()));
}

}  // namespace

TEST_CASE("identity operator converges in one step to the rhs") {
  DenseOperator op(MatrixXd::Identity(5, 5));
  testutil::Rng rng(51);
  VectorXd b = rng.vector(5);
  MinresOutcome out = minres(op, b, 1e-12, 100);
  CHECK(out.status == MinresStatus::CONVERGED);
  CHECK(out.iterations == 1);
  CHECK(out.op_applications == 2);  // initialization plus one Lanczos step
  CHECK((out.solution - b).norm() <= 1e-13 * b.norm());
}

TEST_CASE("2x2 indefinite diagonal solves exactly within two steps") {
  DenseOperator op = diag_op(diag_vector({-1.0, 1.0}));
  VectorXd b(2);
  b << 1.0, 1.0;
  MinresOutcome out = minres(op, b, 1e-12, 100);
  CHECK(out.status == MinresStatus::CONVERGED);
  CHECK(out.iterations <= 2);
  VectorXd want(2);
  want << -1.0, 1.0;  // direct solve
  CHECK((out.solution - want).norm() <= 1e-12);
}

TEST_CASE("3x3 definite diagonal matches the direct solve") {
  DenseOperator op = diag_op(diag_vector({1.0, 2.0, 3.0}));
  testutil::Rng rng(52);
  VectorXd b = rng.vector(3);
  MinresOutcome out = minres(op, b, 1e-10, 100);
  CHECK(out.status == MinresStatus::CONVERGED);
  CHECK(out.iterations <= 3);
  VectorXd want(3);
  for (int i = 0; i < 3; ++i) want[i] = b[i] / (i + 1.0);
  CHECK((out.solution - want).norm() <= 1e-9 * std::max(1.0, want.norm()));
}

TEST_CASE("zero rhs returns immediately with a zero solution") {
  DenseOperator op(MatrixXd::Identity(4, 4));
  MinresOutcome out = minres(op, VectorXd::Zero(4), 1e-10, 50);
  CHECK(out.status == MinresStatus::CONVERGED);
  CHECK(out.iterations == 0);
  CHECK(out.op_applications == 0);
  CHECK(out.solution.norm() == 0.0);
  REQUIRE(out.residual_history.size() == 1);
  CHECK(out.residual_history[0] == 0.0);
}

TEST_CASE("residual history is nonincreasing and matches status semantics") {
  testutil::Rng rng(53);
  for (int t = 0; t < 6; ++t) {
    int n = 30 + rng.index(40);
    MatrixXd S = rng.matrix(n, n);
    MatrixXd sym = 0.5 * (S + S.transpose());
    DenseOperator op(sym);
    VectorXd b = rng.vector(n);
    double rtol = 1e-8;
    MinresOutcome out = minres(op, b, rtol, 3 * n);
    for (std::size_t j = 0; j + 1 < out.residual_history.size(); ++j)
      CHECK(out.residual_history[j + 1] <= out.residual_history[j] + 1e-13 * b.norm());
    CHECK(out.residual_history.size() == static_cast<std::size_t>(out.iterations) + 1);
    CHECK(out.op_applications == static_cast<std::uint64_t>(out.iterations) + 1);
    if (out.status == MinresStatus::CONVERGED)
      CHECK(out.residual_history.back() <= rtol * b.norm());
    // the recorded residual norm is the truth, not just a recurrence artifact
    VectorXd resid = b - sym * out.solution;
    CHECK(std::abs(resid.norm() - out.residual_history.back()) <=
          1e-10 * std::max(1.0, b.norm()));
  }
}

TEST_CASE("residual history equals the Krylov-space optimum") {
  testutil::Rng rng(54);
  const int n = 25;
  MatrixXd S = rng.matrix(n, n);
  MatrixXd sym = 0.5 * (S + S.transpose());
  DenseOperator op(sym);
  VectorXd b = rng.vector(n);
  MinresOutcome out = minres(op, b, 1e-14, 10);

  // explicit orthonormal Krylov basis of span{b, sym b, sym^2 b, ...}
  MatrixXd basis(n, 10);
  VectorXd next = b;
  int built = 0;
  for (int j = 0; j < 10; ++j) {
    auto q = orthonormalize_against(next, MatrixXd(basis.leftCols(built)));
    if (!q) break;
    basis.col(built++) = *q;
    next = sym * basis.col(built - 1);
  }
  for (int j = 1; j <= std::min(out.iterations, built); ++j) {
    MatrixXd W = basis.leftCols(j);
    MatrixXd AW = sym * W;
    VectorXd c = AW.colPivHouseholderQr().solve(b);
    double best = (b - AW * c).norm();
    CHECK(std::abs(out.residual_history[j] - best) <= 1e-10 * std::max(1.0, b.norm()));
  }
}

TEST_CASE("definite spectra obey the single-interval convergence bound") {
  testutil::Rng rng(55);
  for (int sign : {1, -1}) {
    for (int t = 0; t < 5; ++t) {
      int n = 40;
      double alpha = 0.5 + rng.uniform(), width = 1.0 + 3.0 * rng.uniform();
      double beta = alpha + width;
      VectorXd d(n);
      d[0] = sign * alpha;
      d[n - 1] = sign * beta;
      for (int i = 1; i + 1 < n; ++i) d[i] = sign * (alpha + width * rng.uniform());
      DenseOperator op = diag_op(d);
      VectorXd b = rng.vector(n);
      MinresOutcome out = minres(op, b, 1e-13, n);
      double factor = 1.0 - 2.0 / (1.0 + std::sqrt(beta) / std::sqrt(alpha));
      double curve = 2.0;
      for (int j = 0; j <= out.iterations; ++j) {
        CHECK(out.residual_history[j] / b.norm() <= curve + 1e-12);
        curve *= factor;
      }
    }
  }
}

TEST_CASE("indefinite spectra with equal interval lengths obey the two-interval bound") {
  testutil::Rng rng(56);
  for (int t = 0; t < 5; ++t) {
    int half = 20, n = 2 * half;
    double a1 = 0.3 + rng.uniform(), b1 = a1 + 1.0 + rng.uniform();
    double a2 = 0.2 + rng.uniform();
    double b2 = a2 + (b1 - a1);  // equal lengths
    VectorXd d(n);
    d[0] = -b1;
    d[1] = -a1;
    d[2] = a2;
    d[3] = b2;
    for (int i = 4; i < n; i += 2) {
      d[i] = -(a1 + (b1 - a1) * rng.uniform());
      d[i + 1] = a2 + (b2 - a2) * rng.uniform();
    }
    DenseOperator op = diag_op(d);
    VectorXd b = rng.vector(n);
    MinresOutcome out = minres(op, b, 1e-13, 2 * n);
    double factor = 1.0 - 2.0 / (1.0 + std::sqrt(b1 * b2) / std::sqrt(a1 * a2));
    for (int j = 0; j <= out.iterations; ++j) {
      double curve = 2.0 * std::pow(factor, j / 2);
      CHECK(out.residual_history[j] / b.norm() <= curve + 1e-12);
    }
  }
}

TEST_CASE("rhs outside the range of a singular operator stagnates") {
  DenseOperator op = diag_op(diag_vector({0.0, 1.0}));
  VectorXd b(2);
  b << 1.0, 1.0;
  MinresOutcome out = minres(op, b, 1e-10, 500);
  CHECK(out.status == MinresStatus::STAGNATED);
  // the unreachable component has norm 1
  CHECK(out.residual_history.back() >= 1.0 - 1e-12);
  CHECK(out.residual_history.back() <= std::sqrt(2.0));
}

TEST_CASE("maxit is honored and flagged") {
  testutil::Rng rng(57);
  int n = 60;
  VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = (i % 2 ? 1.0 : -1.0) * (0.01 + rng.uniform());
  DenseOperator op = diag_op(d);
  VectorXd b = rng.vector(n);
  MinresOutcome out = minres(op, b, 1e-14, 3);
  CHECK(out.status == MinresStatus::MAXIT);
  CHECK(out.iterations == 3);
  CHECK(out.op_applications == 4);
}

TEST_CASE("projected operator: solution stays orthogonal to the projected block") {
  testutil::Rng rng(58);
  int m = 30, n = 22, p = 2;
  auto planted = testutil::planted_dense(rng, m, n, VectorXd::LinSpaced(n, 0.4, 2.6));
  SparseMatrix A = sparse_from_dense(planted.A);
  MatrixXd Up = planted.U.leftCols(p), Vp = planted.V.leftCols(p);
  ProjectedAugmentedOp op(A, 1.0, Up, Vp);
  VectorXd rhs = rng.vector(m + n);
  op.project(rhs);  // rhs now lies in the operator's range closure
  MinresOutcome out = minres(op, rhs, 1e-10, m + n);
  CHECK(out.status == MinresStatus::CONVERGED);
  CHECK((Up.transpose() * out.solution.head(m)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((Vp.transpose() * out.solution.tail(n)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("non-finite propagation is reported with the iteration number") {
  MatrixXd bad(2, 2);
  bad << std::nan(""), 0.0, 0.0, 1.0;
  DenseOperator op(bad);
  VectorXd b(2);
  b << 1.0, 1.0;
  CHECK_THROWS_WITH_AS(minres(op, b, 1e-10, 10), doctest::Contains("iteration"),
                       std::runtime_error);
}
