// Outer iteration over a pair of search spaces. The product caches AV and
// A^T U make extraction, purgation and restarts free of sparse products, so
// the whole matrix cost is two products per expansion plus two per inner
// operator application.
#include "ipjdsvd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "ipjdsvd/dense_svd.hpp"

namespace ipjdsvd {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool all_finite(const VectorXd& v) { return v.allFinite(); }

VectorXd normalized_start(const VectorXd& given, int n, const char* which) {
  if (given.size() == 0) return VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  if (given.size() != n)
    throw std::invalid_argument(std::string(which) + " has the wrong length");
  if (!all_finite(given) || given.norm() == 0.0)
    throw std::invalid_argument(std::string(which) + " must be finite and nonzero");
  return given / given.norm();
}

MatrixXd hstack(const MatrixXd& left, const MatrixXd& right) {
  if (left.cols() == 0) return right;
  MatrixXd out(right.rows(), left.cols() + right.cols());
  out << left, right;
  return out;
}

// A random unit vector orthonormal against Q. Retries a few draws; failure
// would mean Q already spans the whole space, which callers rule out.
VectorXd fresh_direction(int n, const MatrixXd& Q, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    VectorXd cand(n);
    for (int i = 0; i < n; ++i) cand[i] = gauss(rng);
    if (auto q = orthonormalize_against(cand, Q)) return *q;
  }
  throw std::runtime_error("could not draw a direction outside the current bases");
}

// Shrinks the bases to the listed Ritz triplets. H becomes exactly diagonal
// and the caches are recombined densely: no sparse products involved.
void recombine(SubspacePair& sub, const RitzSet& ritz, const std::vector<int>& keep) {
  const int kk = static_cast<int>(keep.size());
  MatrixXd Csel(ritz.C.rows(), kk), Dsel(ritz.D.rows(), kk);
  MatrixXd Un(sub.U.rows(), kk), Vn(sub.V.rows(), kk);
  VectorXd th(kk);
  for (int i = 0; i < kk; ++i) {
    Csel.col(i) = ritz.C.col(keep[i]);
    Dsel.col(i) = ritz.D.col(keep[i]);
    Un.col(i) = ritz.Ur.col(keep[i]);
    Vn.col(i) = ritz.Vr.col(keep[i]);
    th[i] = ritz.theta[keep[i]];
  }
  sub.AV = sub.AV * Dsel;
  sub.AtU = sub.AtU * Csel;
  sub.U = std::move(Un);
  sub.V = std::move(Vn);
  sub.H = th.asDiagonal();
  sub.k = kk;
}

// Rebuilds orthonormality and the caches from scratch when recombination
// drift ever exceeds 1e-10. Costs one basis-building event per column, which
// the caller must add to its expansion tally; in practice this never fires.
int repair_if_drifted(SubspacePair& sub, const SparseMatrix& A) {
  const int k = sub.k;
  MatrixXd eye = MatrixXd::Identity(k, k);
  double drift = std::max(
      (sub.U.transpose() * sub.U - eye).cwiseAbs().maxCoeff(),
      (sub.V.transpose() * sub.V - eye).cwiseAbs().maxCoeff());
  if (drift <= 1e-10) return 0;
  Eigen::HouseholderQR<MatrixXd> qu(sub.U), qv(sub.V);
  sub.U = qu.householderQ() * MatrixXd::Identity(sub.U.rows(), k);
  sub.V = qv.householderQ() * MatrixXd::Identity(sub.V.rows(), k);
  for (int j = 0; j < k; ++j) {
    sub.AV.col(j) = A.apply(sub.V.col(j));
    sub.AtU.col(j) = A.apply_transpose(sub.U.col(j));
  }
  sub.H = sub.U.transpose() * sub.AV;
  return k;
}

double locked_overlap(const SubspacePair& sub, const DeflationSet& defl) {
  if (defl.count() == 0) return 0.0;
  double u = (sub.U.transpose() * defl.U).norm();
  double v = (sub.V.transpose() * defl.V).norm();
  return std::max(u, v);
}

RunReport solve_tall(const SparseMatrix& A, const SolverConfig& cfg);

}  // namespace

void SolverConfig::validate(int rows, int cols) const {
  if (ell < 1 || ell > std::min(rows, cols))
    throw std::invalid_argument("ell must lie in [1, min(M, N)]");
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("tau must be a finite nonnegative number");
  if (!(tol > 0.0) || tol >= 1.0) throw std::invalid_argument("tol must lie in (0, 1)");
  if (k_min <= 1) throw std::invalid_argument("k_min must exceed 1");
  if (k_max <= k_min) throw std::invalid_argument("k_max must exceed k_min");
  if (!(eps_inner > 0.0) || eps_inner > 1e-3)
    throw std::invalid_argument("eps_inner must lie in (0, 1e-3]");
  if (!(pretol1 > 0.0) || pretol1 >= 1.0)
    throw std::invalid_argument("pretol1 must lie in (0, 1)");
  if (!(pretol2 > 0.0) || pretol2 >= 1.0)
    throw std::invalid_argument("pretol2 must lie in (0, 1)");
  if (maxit_outer < 0) throw std::invalid_argument("maxit_outer must be nonnegative");
  if (inner_maxit < 0) throw std::invalid_argument("inner_maxit must be nonnegative");
  if (audit_cap < 2) throw std::invalid_argument("audit_cap must be at least 2");
  if (u0.size() != 0 && u0.size() != rows)
    throw std::invalid_argument("u0 has the wrong length");
  if (v0.size() != 0 && v0.size() != cols)
    throw std::invalid_argument("v0 has the wrong length");
}

SubspacePair init_subspace(const SparseMatrix& A, const Eigen::VectorXd& u0,
                           const Eigen::VectorXd& v0) {
  VectorXd u = normalized_start(u0, A.rows(), "u0");
  VectorXd v = normalized_start(v0, A.cols(), "v0");
  SubspacePair sub;
  sub.U = u;
  sub.V = v;
  sub.AV = A.apply(v);
  sub.AtU = A.apply_transpose(u);
  sub.H = MatrixXd::Constant(1, 1, u.dot(sub.AV.col(0)));
  sub.k = 1;
  return sub;
}

RitzSet extract_ritz(const SubspacePair& sub, double tau) {
  SmallSvd sv = small_svd(sub.H, tau);
  RitzSet ritz;
  ritz.theta = sv.theta;
  ritz.C = sv.C;
  ritz.D = sv.D;
  ritz.Ur = sub.U * ritz.C;
  ritz.Vr = sub.V * ritz.D;
  ritz.Ru = sub.AV * ritz.D - ritz.Ur * ritz.theta.asDiagonal();
  ritz.Rv = sub.AtU * ritz.C - ritz.Vr * ritz.theta.asDiagonal();
  ritz.rnorm.resize(sub.k);
  for (int i = 0; i < sub.k; ++i)
    ritz.rnorm[i] =
        std::sqrt(ritz.Ru.col(i).squaredNorm() + ritz.Rv.col(i).squaredNorm());
  return ritz;
}

std::vector<int> select_cluster(const RitzSet& ritz, double tau, double pretol1,
                                double pretol2, double norme) {
  std::vector<int> selected{0};
  for (int i = 1; i < ritz.theta.size(); ++i) {
    bool near = std::abs(ritz.theta[i] - tau) <= std::max(ritz.theta[i], 1.0) * pretol1;
    bool settled = ritz.rnorm[i] <= norme * pretol2;
    if (near && settled) selected.push_back(i);
  }
  return selected;
}

double inner_tolerance(const RitzSet& ritz, double eps_inner, double norme) {
  double rho = 1.0;
  if (ritz.theta.size() > 1 && norme > 0.0) {
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 1; i < ritz.theta.size(); ++i)
      gap = std::min(gap, std::abs(ritz.theta[i] - ritz.theta[0]));
    rho = std::clamp(gap / norme, 1e-2, 1e+2);
  }
  return std::min(rho * eps_inner, 0.1);
}

CorrectionSystem assemble_correction(const SparseMatrix& A, double tau,
                                     const RitzSet& ritz,
                                     const std::vector<int>& selected,
                                     const DeflationSet& defl) {
  if (selected.empty() || selected.front() != 0)
    throw std::invalid_argument("the selected list must start with triplet 0");
  const int m = static_cast<int>(selected.size());
  const int j = defl.count();
  MatrixXd Up(A.rows(), j + m), Vp(A.cols(), j + m);
  if (j > 0) {
    Up.leftCols(j) = defl.U;
    Vp.leftCols(j) = defl.V;
  }
  for (int i = 0; i < m; ++i) {
    Up.col(j + i) = ritz.Ur.col(selected[i]);
    Vp.col(j + i) = ritz.Vr.col(selected[i]);
  }

  VectorXd top = -ritz.Ru.col(0);
  VectorXd bottom = -ritz.Rv.col(0);
  if (j > 0) {
    top += defl.U * (defl.U.transpose() * ritz.Ru.col(0));
    bottom += defl.V * (defl.V.transpose() * ritz.Rv.col(0));
  }
  VectorXd rhs(A.rows() + A.cols());
  rhs << top, bottom;

  ProjectedAugmentedOp op(A, tau, std::move(Up), std::move(Vp));
  // The residual is orthogonal to every projector column up to rounding;
  // one projection pins the rhs into the operator's invariant subspace.
  op.project(rhs);
  return CorrectionSystem{std::move(op), std::move(rhs)};
}

ExpansionNote expand_subspace(SubspacePair& sub, const Eigen::VectorXd& s,
                              const Eigen::VectorXd& t, const SparseMatrix& A,
                              const DeflationSet& defl, std::mt19937_64& rng) {
  const int k = sub.k;
  MatrixXd Qu = defl.count() > 0 ? hstack(defl.U, sub.U) : sub.U;
  MatrixXd Qv = defl.count() > 0 ? hstack(defl.V, sub.V) : sub.V;

  ExpansionNote note;
  auto su = orthonormalize_against(s, Qu);
  note.dropped_s = !su.has_value();
  VectorXd uplus = note.dropped_s ? fresh_direction(sub.U.rows(), Qu, rng) : *su;
  auto tv = orthonormalize_against(t, Qv);
  note.dropped_t = !tv.has_value();
  VectorXd vplus = note.dropped_t ? fresh_direction(sub.V.rows(), Qv, rng) : *tv;

  VectorXd av = A.apply(vplus);
  VectorXd atu = A.apply_transpose(uplus);
  VectorXd newcol = sub.U.transpose() * av;   // H(0..k-1, k)
  VectorXd newrow = sub.V.transpose() * atu;  // H(k, 0..k-1)
  double corner = uplus.dot(av);

  sub.U.conservativeResize(Eigen::NoChange, k + 1);
  sub.U.col(k) = uplus;
  sub.V.conservativeResize(Eigen::NoChange, k + 1);
  sub.V.col(k) = vplus;
  sub.AV.conservativeResize(Eigen::NoChange, k + 1);
  sub.AV.col(k) = av;
  sub.AtU.conservativeResize(Eigen::NoChange, k + 1);
  sub.AtU.col(k) = atu;
  sub.H.conservativeResize(k + 1, k + 1);
  sub.H.block(0, k, k, 1) = newcol;
  sub.H.block(k, 0, 1, k) = newrow.transpose();
  sub.H(k, k) = corner;
  sub.k = k + 1;
  return note;
}

void thick_restart(SubspacePair& sub, const RitzSet& ritz,
                   const std::vector<int>& selected, int k_min) {
  const int m = static_cast<int>(selected.size());
  std::vector<int> keep;
  if (m <= k_min) {
    int kk = std::min(k_min, sub.k);
    keep.resize(kk);
    for (int i = 0; i < kk; ++i) keep[i] = i;
  } else {
    keep = selected;
  }
  recombine(sub, ritz, keep);
}

void purge_after_convergence(SubspacePair& sub, const RitzSet& ritz) {
  if (sub.k < 2)
    throw std::invalid_argument("purge needs at least two triplets in the space");
  std::vector<int> keep(sub.k - 1);
  for (int i = 0; i + 1 < sub.k; ++i) keep[i] = i + 1;
  recombine(sub, ritz, keep);
}

namespace {

RunReport solve_tall(const SparseMatrix& A, const SolverConfig& cfg) {
  const int M = A.rows(), N = A.cols();
  const NormEstimates norms = A.norm_estimates();
  const double norme = norms.norme;
  const int maxit = cfg.maxit_outer > 0 ? cfg.maxit_outer : 500 * cfg.ell;
  const int inner_cap =
      cfg.inner_maxit > 0 ? cfg.inner_maxit : std::min(M + N, 3000);
  const std::uint64_t mv_start = A.mv_count();
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);

  RunReport rep;
  rep.config = cfg;
  rep.norms = norms;

  DeflationSet defl;
  defl.U = MatrixXd(M, 0);
  defl.V = MatrixXd(N, 0);
  std::vector<double> locked_rnorms;

  SubspacePair sub = init_subspace(A, cfg.u0, cfg.v0);
  rep.expansions = 1;

  int outer = 0;
  std::vector<int> current_bucket;
  // Counters for events between correction solves; folded into the next
  // trace row, or into the trailing fields when the run ends first.
  int deflated_pending = 0, reinits_pending = 0, repair_units_pending = 0;
  std::uint64_t purge_mv_pending = 0;
  double ortho_pending = 0.0;

  auto finish = [&](SolveStatus status) {
    rep.status = status;
    rep.sigma = defl.sigma;
    rep.U = defl.U;
    rep.V = defl.V;
    rep.residual_norms.resize(static_cast<int>(locked_rnorms.size()));
    for (std::size_t i = 0; i < locked_rnorms.size(); ++i)
      rep.residual_norms[static_cast<int>(i)] = locked_rnorms[i];
    rep.outer_iterations = outer;
    rep.trailing_expansion_units = reinits_pending + repair_units_pending;
    if (!current_bucket.empty()) rep.inner_histories.push_back(current_bucket);
    rep.mv_count = A.mv_count() - mv_start;
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };

  while (true) {
    RitzSet ritz = extract_ritz(sub, cfg.tau);
    ortho_pending = std::max(ortho_pending, locked_overlap(sub, defl));

    // Lock at most one triplet per cycle. When several candidates meet the
    // tolerance at once they lock on consecutive cycles, nearest first, with
    // an expansion in between; that pause lets a direction hidden behind an
    // exactly invariant leftover space (think multiple singular values)
    // reenter through the expansion draw instead of being shadowed forever.
    if (check_convergence(ritz.rnorm[0], norme, cfg.tol)) {
      int j = defl.count();
      defl.sigma.conservativeResize(j + 1);
      defl.sigma[j] = ritz.theta[0];
      defl.U.conservativeResize(Eigen::NoChange, j + 1);
      defl.U.col(j) = ritz.Ur.col(0);
      defl.V.conservativeResize(Eigen::NoChange, j + 1);
      defl.V.col(j) = ritz.Vr.col(0);
      locked_rnorms.push_back(ritz.rnorm[0]);
      rep.converged_at.push_back(outer);
      rep.inner_histories.push_back(current_bucket);
      current_bucket.clear();
      deflated_pending += 1;

      if (defl.count() == cfg.ell) return finish(SolveStatus::CONVERGED);

      if (sub.k >= 2) {
        std::uint64_t before = A.mv_count();
        purge_after_convergence(sub, ritz);
        purge_mv_pending += A.mv_count() - before;
        int repaired = repair_if_drifted(sub, A);
        repair_units_pending += repaired;
        rep.expansions += repaired;
      } else {
        // The whole space converged away: restart from a fresh direction
        // outside everything locked so far.
        VectorXd u = fresh_direction(M, defl.U, rng);
        VectorXd v = fresh_direction(N, defl.V, rng);
        sub = init_subspace(A, u, v);
        rep.expansions += 1;
        reinits_pending += 1;
      }
      ritz = extract_ritz(sub, cfg.tau);
      ortho_pending = std::max(ortho_pending, locked_overlap(sub, defl));
    }

    if (outer >= maxit) return finish(SolveStatus::MAXIT_OUTER);

    std::vector<int> selected =
        select_cluster(ritz, cfg.tau, cfg.pretol1, cfg.pretol2, norme);
    if (cfg.mode == Mode::JDSVD) selected = {0};
    // Room to grow: the bases cannot exceed the free dimensions, and the
    // expansion after a restart must still fit under k_max.
    const int j = defl.count();
    const int grow_cap = std::min({cfg.k_max, M - j, N - j});
    const int max_selected = std::max(1, grow_cap - 1);
    if (static_cast<int>(selected.size()) > max_selected)
      selected.resize(max_selected);

    double rtol = inner_tolerance(ritz, cfg.eps_inner, norme);
    CorrectionSystem sys = assemble_correction(A, cfg.tau, ritz, selected, defl);
    MinresOutcome inner = minres(sys.op, sys.rhs, rtol, inner_cap);
    outer += 1;
    current_bucket.push_back(inner.iterations);
    rep.inner_iterations_total += static_cast<std::uint64_t>(inner.iterations);
    rep.inner_inits_total +=
        inner.op_applications - static_cast<std::uint64_t>(inner.iterations);

    TraceRow row;
    row.outer = outer;
    row.k = sub.k;
    row.theta1 = ritz.theta[0];
    row.rnorm1 = ritz.rnorm[0];
    row.m_selected = static_cast<int>(selected.size());
    row.rtol_inner = rtol;
    row.inner_iterations = inner.iterations;
    row.inner_inits =
        static_cast<int>(inner.op_applications) - inner.iterations;
    row.deflated = deflated_pending;
    row.purge_mvs = purge_mv_pending;
    row.reinits = reinits_pending;
    int units = reinits_pending + repair_units_pending;
    deflated_pending = 0;
    purge_mv_pending = 0;
    reinits_pending = 0;
    repair_units_pending = 0;

    row.k_after_restart = sub.k;
    if (sub.k >= grow_cap && grow_cap >= 2) {
      int k_min_eff = std::min(cfg.k_min, grow_cap - 1);
      thick_restart(sub, ritz, selected, k_min_eff);
      int repaired = repair_if_drifted(sub, A);
      units += repaired;
      rep.expansions += repaired;
      row.restarted = true;
      row.k_after_restart = sub.k;
      row.restart_clamped =
          sub.k != std::max(cfg.k_min, static_cast<int>(selected.size()));
    }

    if (sub.k < grow_cap) {
      expand_subspace(sub, inner.solution.head(M), inner.solution.tail(N), A,
                      defl, rng);
      rep.expansions += 1;
      units += 1;
    }
    row.expansion_units = units;
    row.defl_ortho = ortho_pending;
    ortho_pending = 0.0;
    row.mv_after = A.mv_count() - mv_start;
    rep.trace.push_back(row);
  }
}

}  // namespace

RunReport solve(const SparseMatrix& A, const SolverConfig& cfg) {
  cfg.validate(A.rows(), A.cols());
  if (A.rows() >= A.cols()) return solve_tall(A, cfg);

  // Tall orientation internally; swap the two sides on the way out.
  SparseMatrix At = A.transposed();
  SolverConfig swapped = cfg;
  swapped.u0 = cfg.v0;
  swapped.v0 = cfg.u0;
  RunReport rep = solve_tall(At, swapped);
  std::swap(rep.U, rep.V);
  rep.transposed = true;
  rep.config = cfg;
  rep.norms.norm1 = At.norm_estimates().norminf;
  rep.norms.norminf = At.norm_estimates().norm1;
  return rep;
}

}  // namespace ipjdsvd
