#include "ipjdsvd/kernels.hpp"

#include <cassert>

namespace ipjdsvd::kernels {

void spmv_serial(int rows, const int* rowptr, const int* colind,
                 const double* vals, const double* x, double* y) {
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int p = rowptr[i]; p < rowptr[i + 1]; ++p) acc += vals[p] * x[colind[p]];
    y[i] = acc;
  }
}

void spmv(int rows, const int* rowptr, const int* colind, const double* vals,
          const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (int p = rowptr[i]; p < rowptr[i + 1]; ++p) acc += vals[p] * x[colind[p]];
    y[i] = acc;
  }
}

void spmv_t_serial(int cols, const int* colptr, const int* rowind,
                   const double* cval, const double* x, double* y) {
  for (int j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (int p = colptr[j]; p < colptr[j + 1]; ++p) acc += cval[p] * x[rowind[p]];
    y[j] = acc;
  }
}

void spmv_t(int cols, const int* colptr, const int* rowind, const double* cval,
            const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (int p = colptr[j]; p < colptr[j + 1]; ++p) acc += cval[p] * x[rowind[p]];
    y[j] = acc;
  }
}

void gemv_t_serial(int n, int k, const double* Q, const double* x, double* y) {
  for (int j = 0; j < k; ++j) {
    const double* col = Q + static_cast<std::ptrdiff_t>(j) * n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += col[i] * x[i];
    y[j] = acc;
  }
}

void gemv_t(int n, int k, const double* Q, const double* x, double* y) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < k; ++j) {
    const double* col = Q + static_cast<std::ptrdiff_t>(j) * n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += col[i] * x[i];
    y[j] = acc;
  }
}

void gemv_sub_serial(int n, int k, const double* Q, const double* y, double* x) {
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += Q[static_cast<std::ptrdiff_t>(j) * n + i] * y[j];
    x[i] -= acc;
  }
}

void gemv_sub(int n, int k, const double* Q, const double* y, double* x) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += Q[static_cast<std::ptrdiff_t>(j) * n + i] * y[j];
    x[i] -= acc;
  }
}

Eigen::VectorXd mat_t_vec(const Eigen::MatrixXd& Q, const Eigen::VectorXd& x) {
  assert(Q.rows() == x.size());
  Eigen::VectorXd y(Q.cols());
  gemv_t(static_cast<int>(Q.rows()), static_cast<int>(Q.cols()), Q.data(),
         x.data(), y.data());
  return y;
}

void sub_mat_vec(const Eigen::MatrixXd& Q, const Eigen::VectorXd& coeff,
                 Eigen::VectorXd& x) {
  assert(Q.rows() == x.size());
  assert(Q.cols() == coeff.size());
  gemv_sub(static_cast<int>(Q.rows()), static_cast<int>(Q.cols()), Q.data(),
           coeff.data(), x.data());
}

}  // namespace ipjdsvd::kernels
