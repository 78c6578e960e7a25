// The implicit symmetric operator of the projected correction equation:
//   diag(I - U_p U_p^T, I - V_p V_p^T) * [[-tau I, A], [A^T, -tau I]] *
//   diag(I - U_p U_p^T, I - V_p V_p^T)
// applied to length-(M+N) vectors without forming any matrix.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ipjdsvd/sparse_matrix.hpp"

namespace ipjdsvd {

// Symmetric linear operator on R^n, the contract the inner solver works with.
class SymmetricOperator {
 public:
  virtual ~SymmetricOperator() = default;
  virtual int size() const = 0;
  virtual void apply(const Eigen::VectorXd& w, Eigen::VectorXd& out) const = 0;
};

class ProjectedAugmentedOp final : public SymmetricOperator {
 public:
  // U_p (M x p) and V_p (N x p) must be orthonormal; p = 0 means the
  // unprojected augmented matrix. The matrix handle must outlive the
  // operator. Throws std::invalid_argument when the blocks deviate from
  // orthonormality by more than 1e-8 or the column counts differ.
  ProjectedAugmentedOp(const SparseMatrix& A, double tau, Eigen::MatrixXd U_p,
                       Eigen::MatrixXd V_p);

  int size() const override { return A_->rows() + A_->cols(); }

  // out = Op * w. Projection is applied on both sides on every call to
  // suppress rounding drift; exactly two metered sparse products are spent.
  void apply(const Eigen::VectorXd& w, Eigen::VectorXd& out) const override;

  // In-place application of diag(I - U_p U_p^T, I - V_p V_p^T) alone.
  void project(Eigen::VectorXd& w) const;

  double tau() const { return tau_; }
  int projected_columns() const { return static_cast<int>(Up_.cols()); }
  const Eigen::MatrixXd& U_p() const { return Up_; }
  const Eigen::MatrixXd& V_p() const { return Vp_; }
  const SparseMatrix& matrix() const { return *A_; }

  // Dense reduced matrix W^T B W of order M+N-2p, where W = diag(P, Q)
  // completes [U_p, P] and [V_p, Q] to orthogonal matrices; the completion is
  // seeded and any completion gives the same spectrum. Audit use only:
  // throws std::invalid_argument when M+N exceeds audit_cap.
  Eigen::MatrixXd assemble_reduced(int audit_cap = 400, std::uint64_t seed = 1) const;

  // The completion blocks themselves (P then Q), for callers that need the
  // reduced basis and not just the reduced matrix.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> completion_blocks(std::uint64_t seed) const;

 private:
  const SparseMatrix* A_;
  double tau_;
  Eigen::MatrixXd Up_, Vp_;
};

}  // namespace ipjdsvd
