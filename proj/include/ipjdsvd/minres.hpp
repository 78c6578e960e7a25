// MINRES for symmetric (possibly indefinite or singular) operators, with the
// full residual-norm history kept for convergence auditing.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ipjdsvd/augmented_op.hpp"

namespace ipjdsvd {

enum class MinresStatus { CONVERGED, MAXIT, STAGNATED };

struct MinresOutcome {
  Eigen::VectorXd solution;
  // ||r_in,j|| for j = 0..iterations; entry 0 is the initial residual norm.
  std::vector<double> residual_history;
  int iterations = 0;
  MinresStatus status = MinresStatus::CONVERGED;
  // One operator application at initialization plus one per Lanczos step,
  // so iterations + 1; the zero-rhs early return is the one exception (0).
  std::uint64_t op_applications = 0;
};

// Solves op * x = rhs from the zero initial guess. Stops when the residual
// drops to rtol * ||rhs|| (CONVERGED), the iteration cap is hit (MAXIT), or
// the residual norm fails to improve by a relative 1e-14 over 50 consecutive
// iterations or the Krylov space is exhausted short of the tolerance
// (STAGNATED, best iterate returned). Throws std::runtime_error naming the
// iteration if non-finite values appear.
MinresOutcome minres(const SymmetricOperator& op, const Eigen::VectorXd& rhs,
                     double rtol, int maxit);

// Adapter exposing a dense symmetric matrix through the operator interface;
// used by the audit paths that run MINRES on explicitly assembled matrices.
class DenseOperator final : public SymmetricOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd mat) : mat_(std::move(mat)) {}
  int size() const override { return static_cast<int>(mat_.rows()); }
  void apply(const Eigen::VectorXd& w, Eigen::VectorXd& out) const override {
    out = mat_ * w;
  }
  const Eigen::MatrixXd& matrix() const { return mat_; }

 private:
  Eigen::MatrixXd mat_;
};

}  // namespace ipjdsvd
