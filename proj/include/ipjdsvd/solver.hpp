// The outer iteration: standard extraction, cluster selection, correction
// solves, subspace expansion, thick restart, deflation and purgation.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "ipjdsvd/augmented_op.hpp"
#include "ipjdsvd/minres.hpp"
#include "ipjdsvd/sparse_matrix.hpp"

namespace ipjdsvd {

enum class Mode { JDSVD, IPJDSVD };
enum class SolveStatus { CONVERGED, MAXIT_OUTER };

struct SolverConfig {
  double tau = 0.0;       // target; triplets are ordered by |sigma - tau|
  int ell = 1;            // number of triplets wanted
  double tol = 1e-8;      // outer tolerance, scaled by ||A||_e
  int k_max = 30;
  int k_min = 3;
  double eps_inner = 1e-4;  // accuracy requirement for expansion vectors
  double pretol1 = 0.05;    // cluster gate on |theta_i - tau|
  double pretol2 = 0.01;    // cluster gate on residual norms
  Mode mode = Mode::IPJDSVD;
  Eigen::VectorXd u0, v0;  // starting vectors; empty means constant 1/sqrt(M), 1/sqrt(N)
  int maxit_outer = 0;     // cap on correction solves; 0 means 500 * ell
  int inner_maxit = 0;     // cap per MINRES solve; 0 means min(M + N, 3000)
  int audit_cap = 400;     // dense-assembly dimension limit for audit paths
  std::uint64_t seed = 1;  // drives reinitialization and substitute vectors

  // Throws std::invalid_argument on out-of-range fields, ell > min(M, N),
  // or starting vectors of the wrong size. Called by solve().
  void validate(int rows, int cols) const;
};

// Search-space state: orthonormal bases with the product caches that make
// extraction, purgation and restarts free of sparse products.
struct SubspacePair {
  Eigen::MatrixXd U;    // M x k, orthonormal
  Eigen::MatrixXd V;    // N x k, orthonormal
  Eigen::MatrixXd AV;   // M x k cache of A * V
  Eigen::MatrixXd AtU;  // N x k cache of A^T * U
  Eigen::MatrixXd H;    // k x k projection U^T A V
  int k = 0;
};

// Approximate triplets extracted from a SubspacePair, ordered by |theta - tau|.
struct RitzSet {
  Eigen::VectorXd theta;   // k values, all >= 0
  Eigen::MatrixXd C, D;    // k x k small factors, H = C diag(theta) D^T
  Eigen::MatrixXd Ur, Vr;  // Ritz vectors U * C, V * D
  Eigen::MatrixXd Ru, Rv;  // residual blocks A*Vr - Ur*Theta and A^T*Ur - Vr*Theta
  Eigen::VectorXd rnorm;   // rnorm(i) = norm of stacked [Ru.col(i); Rv.col(i)]
};

// Converged triplets, locked out of the search space.
struct DeflationSet {
  Eigen::VectorXd sigma;  // values in convergence order
  Eigen::MatrixXd U, V;   // M x j and N x j
  int count() const { return static_cast<int>(sigma.size()); }
};

// One row per correction solve.
struct TraceRow {
  int outer = 0;  // 1-based solve index
  int k = 0;      // subspace dimension the solve was extracted from
  double theta1 = 0.0;
  double rnorm1 = 0.0;
  int m_selected = 0;       // cluster size used by this solve
  double rtol_inner = 0.0;  // MINRES relative tolerance
  int inner_iterations = 0;
  int inner_inits = 0;  // 1, or 0 when the rhs was exactly zero
  bool restarted = false;
  int k_after_restart = 0;  // dimension right after the restart; k when none fired
  // True when the retained dimension was cut below max(k_min, m_selected)
  // because the matrix is too small to grow past it. Never set on problems
  // whose free dimensions exceed k_max.
  bool restart_clamped = false;
  int deflated = 0;         // triplets locked since the previous row
  std::uint64_t purge_mvs = 0;  // sparse products consumed by those purges
  int reinits = 0;              // random reinitializations since the previous row
  int expansion_units = 0;      // basis-building events charged to this row (2 MVs each)
  double defl_ortho = 0.0;      // max of ||U^T U_c||_F, ||V^T V_c||_F seen at extraction
  std::uint64_t mv_after = 0;   // cumulative product tally after this row
};

struct RunReport {
  Eigen::VectorXd sigma;           // converged values, convergence order
  Eigen::MatrixXd U, V;            // matching vectors
  Eigen::VectorXd residual_norms;  // residual norms at lock time
  std::vector<int> converged_at;   // outer count when each triplet locked
  int outer_iterations = 0;        // correction solves; equals trace.size()
  std::uint64_t mv_count = 0;      // products with A and A^T, tally delta
  int expansions = 0;              // basis-building events, 2 products each
  std::uint64_t inner_iterations_total = 0;
  std::uint64_t inner_inits_total = 0;
  int trailing_expansion_units = 0;  // expansions after the last trace row
  // Inner iteration counts bucketed per converged triplet; a trailing bucket
  // holds solves spent on an unfinished triplet when the cap was hit.
  std::vector<std::vector<int>> inner_histories;
  double wall_seconds = 0.0;
  SolveStatus status = SolveStatus::CONVERGED;
  bool transposed = false;  // input had M < N and was solved transposed
  NormEstimates norms;
  SolverConfig config;
  std::vector<TraceRow> trace;
};

// Builds the k = 1 state from normalized starting vectors; spends exactly
// one product by A and one by A^T.
SubspacePair init_subspace(const SparseMatrix& A, const Eigen::VectorXd& u0,
                           const Eigen::VectorXd& v0);

// Standard extraction with residuals, ordered by distance of theta from tau.
// Consumes no sparse products: everything comes from the caches.
RitzSet extract_ritz(const SubspacePair& sub, double tau);

inline bool check_convergence(double rnorm, double norme, double tol) {
  return rnorm <= norme * tol;
}

// Indices (0-based, into the RitzSet ordering) of the triplets clustered at
// tau: index 0 always, index i when |theta_i - tau| <= max(theta_i, 1) *
// pretol1 and rnorm_i <= norme * pretol2.
std::vector<int> select_cluster(const RitzSet& ritz, double tau, double pretol1,
                                double pretol2, double norme);

// Relative inner tolerance min(rho * eps_inner, 0.1), where rho is the
// smallest gap |theta_i - theta_1| over i >= 2 scaled by ||A||_e and clamped
// to [1e-2, 1e+2]; rho = 1 when there is no second Ritz value.
double inner_tolerance(const RitzSet& ritz, double eps_inner, double norme);

// The projected operator and right-hand side of the correction equation.
// selected must start with 0; U_p = [U_c, selected Ritz vectors] and
// r_p = -diag(I - U_c U_c^T, I - V_c V_c^T) r^(1), cleaned by one more
// projection so the rhs lies in the operator's invariant subspace.
struct CorrectionSystem {
  ProjectedAugmentedOp op;
  Eigen::VectorXd rhs;
};
CorrectionSystem assemble_correction(const SparseMatrix& A, double tau,
                                     const RitzSet& ritz,
                                     const std::vector<int>& selected,
                                     const DeflationSet& defl);

// Appends one direction to each basis: s and t are orthonormalized against
// [U_c, U] and [V_c, V]; a vector that vanishes there is replaced by a random
// draw (the DROPPED path). Exactly one product by A and one by A^T update the
// caches and H. Returns the number of basis-building events charged (1).
struct ExpansionNote {
  int units = 1;
  bool dropped_s = false;
  bool dropped_t = false;
};
ExpansionNote expand_subspace(SubspacePair& sub, const Eigen::VectorXd& s,
                              const Eigen::VectorXd& t, const SparseMatrix& A,
                              const DeflationSet& defl, std::mt19937_64& rng);

// Thick restart: keeps the k_min triplets nearest tau when the cluster is
// small, or exactly the selected cluster otherwise; H becomes diagonal and
// the caches are recombined without sparse products.
void thick_restart(SubspacePair& sub, const RitzSet& ritz,
                   const std::vector<int>& selected, int k_min);

// Drops triplet 1 after it converged: bases shrink to the remaining Ritz
// vectors, H becomes diag(theta_2, ..., theta_k). No sparse products.
// Requires k >= 2.
void purge_after_convergence(SubspacePair& sub, const RitzSet& ritz);

// Algorithm level entry point. Inputs with M < N are solved on the transpose
// and the roles of u and v are swapped on output.
RunReport solve(const SparseMatrix& A, const SolverConfig& cfg);

}  // namespace ipjdsvd
