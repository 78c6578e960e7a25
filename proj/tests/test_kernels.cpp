#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cstring>
#include <omp.h>

#include "ipjdsvd/kernels.hpp"
#include "test_util.hpp"

using namespace ipjdsvd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Brute-force product oracle: plain triple loop over the dense view.
VectorXd dense_mv(const MatrixXd& A, const VectorXd& x) {
  VectorXd y = VectorXd::Zero(A.rows());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) y[i] += A(i, j) * x[j];
  return y;
}

// CSC arrays of the dense matrix, value per entry (ascending row per column).
std::tuple<std::vector<int>, std::vector<int>, std::vector<double>>
dense_to_csc(const MatrixXd& A) {
  std::vector<int> colptr(A.cols() + 1, 0), rowind;
  std::vector<double> cval;
  for (int j = 0; j < A.cols(); ++j) {
    for (int i = 0; i < A.rows(); ++i) {
      if (A(i, j) != 0.0) {
        rowind.push_back(i);
        cval.push_back(A(i, j));
      }
    }
    colptr[j + 1] = static_cast<int>(rowind.size());
  }
  return {colptr, rowind, cval};
}

bool bitwise_equal(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("spmv matches a triple-loop dense oracle") {
  testutil::Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    int m = 1 + rng.index(60), n = 1 + rng.index(50);
    auto [rowptr, colind, vals] = testutil::random_csr(rng, m, n, 0.2);
    MatrixXd Ad = testutil::csr_to_dense(m, n, rowptr, colind, vals);
    VectorXd x = rng.vector(n), y(m);
    kernels::spmv(m, rowptr.data(), colind.data(), vals.data(), x.data(), y.data());
    VectorXd want = dense_mv(Ad, x);
    double scale = std::max(1.0, want.norm());
    CHECK((y - want).norm() / scale < 1e-14);
  }
}

TEST_CASE("spmv_t matches the dense oracle") {
  testutil::Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    int m = 1 + rng.index(60), n = 1 + rng.index(50);
    auto [rowptr, colind, vals] = testutil::random_csr(rng, m, n, 0.2);
    MatrixXd Ad = testutil::csr_to_dense(m, n, rowptr, colind, vals);
    auto [colptr, rowind, cval] = dense_to_csc(Ad);
    VectorXd x = rng.vector(m), y(n);
    kernels::spmv_t(n, colptr.data(), rowind.data(), cval.data(), x.data(), y.data());
    VectorXd want = dense_mv(MatrixXd(Ad.transpose()), x);
    double scale = std::max(1.0, want.norm());
    CHECK((y - want).norm() / scale < 1e-14);
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial references") {
  testutil::Rng rng(13);
  REQUIRE(omp_get_max_threads() >= 1);
  for (int t = 0; t < 30; ++t) {
    int m = 1 + rng.index(120), n = 1 + rng.index(90);
    auto [rowptr, colind, vals] = testutil::random_csr(rng, m, n, 0.15);
    MatrixXd Ad = testutil::csr_to_dense(m, n, rowptr, colind, vals);
    auto [colptr, rowind, cval] = dense_to_csc(Ad);

    VectorXd x = rng.vector(n), xm = rng.vector(m);
    VectorXd y_par(m), y_ser(m), z_par(n), z_ser(n);
    kernels::spmv(m, rowptr.data(), colind.data(), vals.data(), x.data(), y_par.data());
    kernels::spmv_serial(m, rowptr.data(), colind.data(), vals.data(), x.data(), y_ser.data());
    CHECK(bitwise_equal(y_par, y_ser));

    kernels::spmv_t(n, colptr.data(), rowind.data(), cval.data(), xm.data(), z_par.data());
    kernels::spmv_t_serial(n, colptr.data(), rowind.data(), cval.data(), xm.data(), z_ser.data());
    CHECK(bitwise_equal(z_par, z_ser));
  }
}

TEST_CASE("gemv_t computes Q^T x and agrees with the serial reference bitwise") {
  testutil::Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    int n = 1 + rng.index(300), k = rng.index(33);
    MatrixXd Q = rng.matrix(n, k);
    VectorXd x = rng.vector(n);
    VectorXd y_par(k), y_ser(k);
    kernels::gemv_t(n, k, Q.data(), x.data(), y_par.data());
    kernels::gemv_t_serial(n, k, Q.data(), x.data(), y_ser.data());
    CHECK(bitwise_equal(y_par, y_ser));
    if (k > 0) {
      VectorXd want = Q.transpose() * x;
      CHECK((y_par - want).norm() < 1e-12 * std::max(1.0, want.norm()));
    }
  }
}

TEST_CASE("gemv_sub computes x -= Q y and agrees with the serial reference bitwise") {
  testutil::Rng rng(15);
  for (int t = 0; t < 20; ++t) {
    int n = 1 + rng.index(300), k = rng.index(33);
    MatrixXd Q = rng.matrix(n, k);
    VectorXd y = rng.vector(k);
    VectorXd x0 = rng.vector(n);
    VectorXd x_par = x0, x_ser = x0;
    kernels::gemv_sub(n, k, Q.data(), y.data(), x_par.data());
    kernels::gemv_sub_serial(n, k, Q.data(), y.data(), x_ser.data());
    CHECK(bitwise_equal(x_par, x_ser));
    VectorXd want = x0 - Q * y;
    CHECK((x_par - want).norm() < 1e-12 * std::max(1.0, want.norm()));
  }
}

TEST_CASE("Eigen-facing wrappers match the raw kernels") {
  testutil::Rng rng(16);
  int n = 200, k = 12;
  MatrixXd Q = rng.matrix(n, k);
  VectorXd x = rng.vector(n);
  VectorXd qt = kernels::mat_t_vec(Q, x);
  VectorXd qt_raw(k);
  kernels::gemv_t(n, k, Q.data(), x.data(), qt_raw.data());
  CHECK(bitwise_equal(qt, qt_raw));

  VectorXd coeff = rng.vector(k);
  VectorXd a = x, b = x;
  kernels::sub_mat_vec(Q, coeff, a);
  kernels::gemv_sub(n, k, Q.data(), coeff.data(), b.data());
  CHECK(bitwise_equal(a, b));

  // zero-column blocks are a no-op
  MatrixXd Q0(n, 0);
  VectorXd empty = kernels::mat_t_vec(Q0, x);
  CHECK(empty.size() == 0);
  VectorXd c = x;
  kernels::sub_mat_vec(Q0, VectorXd(0), c);
  CHECK(bitwise_equal(c, x));
}
