#include "ipjdsvd/augmented_op.hpp"

#include <random>
#include <stdexcept>

#include "ipjdsvd/dense_svd.hpp"
#include "ipjdsvd/kernels.hpp"

namespace ipjdsvd {

namespace {

double orthonormality_deviation(const Eigen::MatrixXd& Q) {
  if (Q.cols() == 0) return 0.0;
  Eigen::MatrixXd g = Q.transpose() * Q;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

// Orthonormal completion of Q to `total` columns from seeded Gaussian draws.
Eigen::MatrixXd complete_orthonormal(const Eigen::MatrixXd& Q, int total,
                                     std::mt19937_64& eng) {
  const int n = static_cast<int>(Q.rows());
  const int p = static_cast<int>(Q.cols());
  Eigen::MatrixXd full(n, total);
  full.leftCols(p) = Q;
  std::normal_distribution<double> gauss(0.0, 1.0);
  int filled = p;
  while (filled < total) {
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = gauss(eng);
    auto r = orthonormalize_against(g, full.leftCols(filled));
    if (!r) continue;  // astronomically unlikely; draw again
    full.col(filled++) = *r;
  }
  return full.rightCols(total - p);
}

}  // namespace

ProjectedAugmentedOp::ProjectedAugmentedOp(const SparseMatrix& A, double tau,
                                           Eigen::MatrixXd U_p, Eigen::MatrixXd V_p)
    : A_(&A), tau_(tau), Up_(std::move(U_p)), Vp_(std::move(V_p)) {
  if (Up_.cols() != Vp_.cols())
    throw std::invalid_argument("projected blocks must have equal column counts");
  if (Up_.cols() > 0 && (Up_.rows() != A.rows() || Vp_.rows() != A.cols()))
    throw std::invalid_argument("projected block row counts must match the matrix");
  if (orthonormality_deviation(Up_) > 1e-8 || orthonormality_deviation(Vp_) > 1e-8)
    throw std::invalid_argument("projected blocks are not orthonormal");
}

void ProjectedAugmentedOp::project(Eigen::VectorXd& w) const {
  const int m = A_->rows(), n = A_->cols();
  if (w.size() != m + n) throw std::invalid_argument("projector length mismatch");
  if (Up_.cols() == 0) return;
  Eigen::VectorXd x = w.head(m), y = w.tail(n);
  kernels::sub_mat_vec(Up_, kernels::mat_t_vec(Up_, x), x);
  kernels::sub_mat_vec(Vp_, kernels::mat_t_vec(Vp_, y), y);
  w.head(m) = x;
  w.tail(n) = y;
}

void ProjectedAugmentedOp::apply(const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
  const int m = A_->rows(), n = A_->cols();
  if (w.size() != m + n) throw std::invalid_argument("operator length mismatch");
  Eigen::VectorXd pw = w;
  project(pw);
  out.resize(m + n);
  out.head(m) = A_->apply(pw.tail(n)) - tau_ * pw.head(m);
  out.tail(n) = A_->apply_transpose(pw.head(m)) - tau_ * pw.tail(n);
  project(out);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> ProjectedAugmentedOp::completion_blocks(
    std::uint64_t seed) const {
  std::mt19937_64 eng(seed);
  Eigen::MatrixXd P = complete_orthonormal(Up_, A_->rows(), eng);
  Eigen::MatrixXd Q = complete_orthonormal(Vp_, A_->cols(), eng);
  return {std::move(P), std::move(Q)};
}

Eigen::MatrixXd ProjectedAugmentedOp::assemble_reduced(int audit_cap,
                                                       std::uint64_t seed) const {
  const int m = A_->rows(), n = A_->cols();
  if (m + n > audit_cap)
    throw std::invalid_argument("reduced assembly needs M+N <= " +
                                std::to_string(audit_cap) + ", got " +
                                std::to_string(m + n));
  auto [P, Q] = completion_blocks(seed);
  const int mr = static_cast<int>(P.cols()), nr = static_cast<int>(Q.cols());
  // G = P^T A Q assembled column by column with unmetered products
  Eigen::MatrixXd G(mr, nr);
  for (int j = 0; j < nr; ++j) G.col(j) = P.transpose() * A_->apply_unmetered(Q.col(j));
  Eigen::MatrixXd R(mr + nr, mr + nr);
  R.topLeftCorner(mr, mr) = -tau_ * Eigen::MatrixXd::Identity(mr, mr);
  R.topRightCorner(mr, nr) = G;
  R.bottomLeftCorner(nr, mr) = G.transpose();
  R.bottomRightCorner(nr, nr) = -tau_ * Eigen::MatrixXd::Identity(nr, nr);
  return R;
}

}  // namespace ipjdsvd
