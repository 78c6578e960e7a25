// Low-level array kernels behind the sparse products and the tall-skinny
// block operations (orthogonalization, projectors). Each kernel has an
// OpenMP variant (default name) and a serial reference (`*_serial`). The
// parallel loops split over independent output components while keeping the
// per-component accumulation order of the serial code, so both variants
// produce bit-identical results for any thread count.
#pragma once

#include <Eigen/Dense>

namespace ipjdsvd::kernels {

// y = A x for a CSR matrix with `rows` rows.
void spmv(int rows, const int* rowptr, const int* colind, const double* vals,
          const double* x, double* y);
void spmv_serial(int rows, const int* rowptr, const int* colind,
                 const double* vals, const double* x, double* y);

// y = A^T x given the CSC mirror of A (`cols` columns of A; rowind ascending
// within each column). Each output component is one column dot product.
void spmv_t(int cols, const int* colptr, const int* rowind, const double* cval,
            const double* x, double* y);
void spmv_t_serial(int cols, const int* colptr, const int* rowind,
                   const double* cval, const double* x, double* y);

// y = Q^T x for dense column-major Q (n rows, k columns, no padding).
void gemv_t(int n, int k, const double* Q, const double* x, double* y);
void gemv_t_serial(int n, int k, const double* Q, const double* x, double* y);

// x -= Q y for dense column-major Q (n rows, k columns).
void gemv_sub(int n, int k, const double* Q, const double* y, double* x);
void gemv_sub_serial(int n, int k, const double* Q, const double* y, double* x);

// Eigen conveniences over the raw kernels.
Eigen::VectorXd mat_t_vec(const Eigen::MatrixXd& Q, const Eigen::VectorXd& x);
void sub_mat_vec(const Eigen::MatrixXd& Q, const Eigen::VectorXd& coeff,
                 Eigen::VectorXd& x);

}  // namespace ipjdsvd::kernels
