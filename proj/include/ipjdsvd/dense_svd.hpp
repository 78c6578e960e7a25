// Dense kernels for the projection-level algebra: full SVD of the small k x k
// matrix H and Gram-Schmidt orthonormalization of expansion vectors.
#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace ipjdsvd {

// Full SVD of H with columns ordered by |theta_i - tau|. Values are
// nonnegative; signs live in the left factors, so H * D.col(i) =
// theta[i] * C.col(i) and H^T * C.col(i) = theta[i] * D.col(i) hold for all i.
struct SmallSvd {
  Eigen::VectorXd theta;   // ordered by |theta - tau| ascending
  Eigen::MatrixXd C, D;    // left/right factors, columns in the same order
  std::vector<int> perm;   // rank -> column index of the unordered factorization
};

// One-sided Jacobi SVD of a square dense H. Ties in |theta - tau| break by
// ascending theta, then by the unordered column index, so the ordering is
// deterministic. Throws std::invalid_argument on non-finite input.
SmallSvd small_svd(const Eigen::MatrixXd& H, double tau);

// Classical Gram-Schmidt with one unconditional re-orthogonalization pass.
// Returns a unit vector orthogonal to the (orthonormal) columns of Q, or
// nullopt when the projection residual has norm <= drop_tol * |v| (the vector
// is numerically inside the span and the caller must substitute).
std::optional<Eigen::VectorXd> orthonormalize_against(const Eigen::VectorXd& v,
                                                      const Eigen::MatrixXd& Q,
                                                      double drop_tol = 1e-10);

}  // namespace ipjdsvd
