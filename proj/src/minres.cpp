#include "ipjdsvd/minres.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ipjdsvd {

// Lanczos + Givens formulation after Paige and Saunders. phibar carries the
// exact residual norm of the current iterate, so the history needs no extra
// products; |sn| <= 1 makes it nonincreasing by construction.
MinresOutcome minres(const SymmetricOperator& op, const Eigen::VectorXd& rhs,
                     double rtol, int maxit) {
  const int n = op.size();
  if (rhs.size() != n) throw std::invalid_argument("minres: rhs length mismatch");
  if (!rhs.allFinite()) throw std::invalid_argument("minres: non-finite rhs");

  MinresOutcome out;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    out.solution = Eigen::VectorXd::Zero(n);
    out.residual_history = {0.0};
    return out;
  }

  // initial residual for the zero guess, spending the initialization apply
  Eigen::VectorXd r0(n);
  op.apply(Eigen::VectorXd::Zero(n), r0);
  out.op_applications = 1;
  r0 = rhs - r0;

  double beta1 = r0.norm();
  out.residual_history.push_back(beta1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);

  // Lanczos state: y is the unnormalized next vector, r1/r2 the two previous
  double beta = beta1, oldb = 0.0;
  Eigen::VectorXd y = r0, r1 = r0, r2 = r0;
  // QR state
  double dbar = 0.0, epsln = 0.0, oldeps = 0.0, cs = -1.0, sn = 0.0;
  double phibar = beta1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n), w1 = w, w2 = w;
  Eigen::VectorXd v(n), opv(n);

  const double eps = std::numeric_limits<double>::epsilon();
  const double breakdown_tol = eps * beta1;
  const double stag_factor = 1.0 - 1e-14;
  int stagnant_steps = 0;
  double last_resid = beta1;
  double anorm_est = 0.0;
  out.status = MinresStatus::MAXIT;

  for (int itn = 1; itn <= maxit; ++itn) {
    v = y / beta;
    op.apply(v, opv);
    ++out.op_applications;
    y = opv;
    if (itn >= 2) y -= (beta / oldb) * r1;
    double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    oldb = beta;
    beta = y.norm();
    if (!std::isfinite(alfa) || !std::isfinite(beta))
      throw std::runtime_error("minres: non-finite value at iteration " +
                               std::to_string(itn));
    anorm_est = std::max(anorm_est, std::abs(alfa) + oldb + beta);

    // previous rotation applied to the new tridiagonal column, then a new one
    oldeps = epsln;
    double delta = cs * dbar + sn * alfa;
    double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;

    if (beta <= breakdown_tol && std::abs(gbar) <= 100.0 * eps * anorm_est) {
      // Krylov space exhausted on a singular projected system: this column
      // adds nothing and its rotation would be rounding noise, so keep the
      // previous iterate and record the stalled step as-is
      out.iterations = itn;
      out.residual_history.push_back(phibar);
      out.status = phibar <= rtol * beta1 ? MinresStatus::CONVERGED
                                          : MinresStatus::STAGNATED;
      break;
    }

    double gamma = std::max(std::hypot(gbar, beta), eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;

    out.iterations = itn;
    out.residual_history.push_back(phibar);

    if (phibar <= rtol * beta1) {
      out.status = MinresStatus::CONVERGED;
      break;
    }
    if (phibar > last_resid * stag_factor) {
      if (++stagnant_steps >= 50) {
        out.status = MinresStatus::STAGNATED;
        break;
      }
    } else {
      stagnant_steps = 0;
    }
    last_resid = phibar;
    if (beta <= breakdown_tol) {
      // Krylov space exhausted with a nonsingular final step: the projected
      // system is solved exactly; any remaining residual is out of range
      out.status = phibar <= rtol * beta1 ? MinresStatus::CONVERGED
                                          : MinresStatus::STAGNATED;
      break;
    }
  }

  out.solution = std::move(x);
  return out;
}

}  // namespace ipjdsvd
