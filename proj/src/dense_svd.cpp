#include "ipjdsvd/dense_svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ipjdsvd/kernels.hpp"

namespace ipjdsvd {

namespace {

// Deterministic completion: first coordinate vector with a large component
// outside span(C_partial), orthonormalized against it.
Eigen::VectorXd complete_column(const Eigen::MatrixXd& C, int filled, int k) {
  for (int cand = 0; cand < k; ++cand) {
    Eigen::VectorXd r = Eigen::VectorXd::Unit(k, cand);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < filled; ++j) r -= C.col(j).dot(r) * C.col(j);
    double n = r.norm();
    if (n > 0.5 / std::sqrt(static_cast<double>(k))) return r / n;
  }
  // unreachable for filled < k: some coordinate direction always sticks out
  throw std::logic_error("orthonormal completion failed");
}

}  // namespace

SmallSvd small_svd(const Eigen::MatrixXd& H, double tau) {
  if (H.rows() != H.cols()) throw std::invalid_argument("small_svd: H must be square");
  if (!H.allFinite()) throw std::invalid_argument("small_svd: non-finite entries");
  const int k = static_cast<int>(H.cols());
  if (k < 1) throw std::invalid_argument("small_svd: empty matrix");

  // One-sided Jacobi: rotate column pairs of W = H * V until all pairs are
  // orthogonal; then W's column norms are the singular values.
  Eigen::MatrixXd W = H;
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(k, k);
  const double off_tol = 1e-15;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < k - 1; ++p) {
      for (int q = p + 1; q < k; ++q) {
        double app = W.col(p).squaredNorm();
        double aqq = W.col(q).squaredNorm();
        double apq = W.col(p).dot(W.col(q));
        if (std::abs(apq) <= off_tol * std::sqrt(app * aqq) || apq == 0.0) continue;
        double zeta = (aqq - app) / (2.0 * apq);
        double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        Eigen::VectorXd wp = W.col(p), wq = W.col(q);
        W.col(p) = c * wp - s * wq;
        W.col(q) = s * wp + c * wq;
        Eigen::VectorXd vp = V.col(p), vq = V.col(q);
        V.col(p) = c * vp - s * vq;
        V.col(q) = s * vp + c * vq;
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  Eigen::VectorXd theta(k);
  for (int j = 0; j < k; ++j) theta[j] = W.col(j).norm();
  const double theta_max = theta.maxCoeff();

  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double da = std::abs(theta[a] - tau), db = std::abs(theta[b] - tau);
    if (da != db) return da < db;
    if (theta[a] != theta[b]) return theta[a] < theta[b];
    return a < b;
  });

  SmallSvd out;
  out.theta.resize(k);
  out.C.resize(k, k);
  out.D.resize(k, k);
  out.perm = order;
  // Columns whose singular value is numerically zero get completed left
  // factors instead of normalized junk.
  const double zero_tol = theta_max * 1e-13;
  std::vector<int> pending;
  for (int r = 0; r < k; ++r) {
    int j = order[r];
    out.theta[r] = theta[j];
    out.D.col(r) = V.col(j);
    if (theta[j] > zero_tol && theta[j] > 0.0)
      out.C.col(r) = W.col(j) / theta[j];
    else
      pending.push_back(r);
  }
  if (!pending.empty()) {
    Eigen::MatrixXd basis(k, k);
    int nb = 0;
    for (int r = 0; r < k; ++r)
      if (theta[order[r]] > zero_tol && theta[order[r]] > 0.0)
        basis.col(nb++) = out.C.col(r);
    for (int r : pending) {
      Eigen::VectorXd col = complete_column(basis, nb, k);
      basis.col(nb++) = col;
      out.C.col(r) = col;
    }
  }
  return out;
}

std::optional<Eigen::VectorXd> orthonormalize_against(const Eigen::VectorXd& v,
                                                      const Eigen::MatrixXd& Q,
                                                      double drop_tol) {
  if (Q.cols() > 0 && Q.rows() != v.size())
    throw std::invalid_argument("orthonormalize_against: row mismatch");
  const double vnorm = v.norm();
  if (vnorm == 0.0) return std::nullopt;
  Eigen::VectorXd r = v;
  if (Q.cols() > 0) {
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd coeff = kernels::mat_t_vec(Q, r);
      kernels::sub_mat_vec(Q, coeff, r);
    }
  }
  const double rnorm = r.norm();
  if (rnorm <= drop_tol * vnorm) return std::nullopt;
  return Eigen::VectorXd(r / rnorm);
}

}  // namespace ipjdsvd
