// Verification harness for the inner-solver convergence theory. Everything in
// here runs against small dense instances: exact singular data comes from an
// independent one-sided Jacobi factorization, closed-form decay curves are
// evaluated from that data, and MINRES histories are checked against them
// trial by trial. Nothing in this header is used by the solver itself.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ipjdsvd/solver.hpp"
#include "ipjdsvd/sparse_matrix.hpp"

namespace ipjdsvd::audit {

// Where the target sits relative to the spectrum. LARGEST and SMALLEST also
// require the cluster nearest the target to consist of the extreme values.
enum class CaseTag { LARGEST, SMALLEST, INTERIOR };

// Closed-form decay curves. T3 and T7 assume the projector is built from exact
// singular vectors (T3 for a single pair, T7 for a cluster of m); T5 and T9
// are their perturbed counterparts with a similarity radius delta. The roman
// numeral picks the target placement: i largest, ii smallest, iii interior.
enum class BoundId {
  T3i, T3ii, T3iii,
  T5i, T5ii, T5iii,
  T7i, T7ii, T7iii,
  T9i, T9ii, T9iii,
};

// Whether bound trials project out exact singular vectors or rotated copies.
enum class VectorMode { EXACT, PERTURBED };

// Full set of singular values of an M x N matrix (M >= N, so N values),
// kept in the two orders the curve formulas draw from.
struct OracleSpectrum {
  std::vector<double> by_closeness;  // sorted by |sigma - tau|, ties by value
  std::vector<double> descending;
  double tau = 0.0;
  int M = 0;
  int N = 0;

  double sigma_max() const { return descending.front(); }
  double sigma_min() const { return descending.back(); }
  double max_k(int k) const;    // k-th largest, 1-based
  double min_k(int k) const;    // k-th smallest, 1-based
  double closest(int k) const;  // k-th nearest to the stored tau, 1-based
};

// Sorts and validates; sigma must hold N nonnegative values and tau >= 0.
OracleSpectrum make_spectrum(const Eigen::VectorXd& sigma, double tau, int M, int N);

// Exact singular triplets of a small matrix, columns ordered like
// spectrum.by_closeness. Dense QR plus a one-sided Jacobi sweep on the
// triangular factor, deliberately sharing nothing with the iterative solver.
struct OracleSvd {
  OracleSpectrum spectrum;
  Eigen::MatrixXd U;  // M x N
  Eigen::MatrixXd V;  // N x N
};
OracleSvd dense_oracle(const SparseMatrix& A, double tau);

// The six convergence-rate factors. g1..g3 describe the single-pair operator,
// g4..g6 the cluster-of-m one; each is present only when its placement
// condition holds for the tau given here (which may differ from the one the
// spectrum was built with). tag classifies the m = 1 placement with midpoint
// ties folded into INTERIOR.
struct GammaFactors {
  CaseTag tag = CaseTag::INTERIOR;
  std::optional<double> g1, g2, g3;
  std::optional<double> g4, g5, g6;
};
GammaFactors gamma_factors(const OracleSpectrum& spec, double tau, int m);

// Strict placement test used by the bound curves: LARGEST needs
// tau > (sigma_max + sigma_max,m+1)/2 with the m nearest values being the m
// largest, SMALLEST mirrors that at the bottom, INTERIOR is the open strip
// between the two midpoints. Throws std::domain_error when nothing applies,
// including exact midpoint hits.
CaseTag classify_case(const OracleSpectrum& spec, double tau, int m);

// One evaluated curve: bound(j) = 2 * prefactor * factor^e with
// e = j for the i-cases and e = max(0, floor((j - j_o)/2)) otherwise.
struct BoundCase {
  BoundId id = BoundId::T3i;
  double factor = 0.0;
  double prefactor = 1.0;  // (sigma_max-ish / tau)^j_o, 1 for square shapes
  int j_o = 0;
  bool half_step = false;
  double delta = 0.0;
  double gap = 0.0;  // |sigma_(m+1) - tau|, the perturbation headroom
};

// Validates the request against the spectrum and fills in the curve.
// Throws std::domain_error for family/m mismatches, a delta on the exact
// families, delta >= gap, a placement that contradicts the roman numeral,
// or a tall-shape smallest case with tau <= 0.
BoundCase make_bound_case(BoundId id, const OracleSpectrum& spec, double tau,
                          int m, double delta);

// The curve value at inner step j >= 0. Nonincreasing in j, starts at
// 2 * prefactor.
double bound_curve(const BoundCase& c, int j);

// Result of one set of bound trials on a fixed matrix. A trial fails when
// some history entry exceeds the curve by more than 1e-12 absolute;
// worst_margin is the smallest bound-minus-ratio seen anywhere. Perturbed
// trials that draw a radius past the gap are counted in skipped.
struct BoundTrialReport {
  BoundId id = BoundId::T3i;
  int trials = 0;
  int skipped = 0;
  int violations = 0;
  double worst_margin = 0.0;
  std::uint64_t seed = 0;
};
BoundTrialReport check_bound_satisfaction(const SparseMatrix& A, double tau,
                                          int m, VectorMode mode, int trials,
                                          std::uint64_t seed);

// MINRES on the projected operator versus MINRES on the dense completed form
// of the same operator, run step for step on the same right-hand side.
// history_gap is the largest pointwise difference of the residual histories
// relative to the starting residual; reconstruction_gap compares the two
// solutions after lifting the reduced one back. Both are exact-arithmetic
// zeros.
struct EquivalenceProbe {
  double history_gap = 0.0;
  double reconstruction_gap = 0.0;
  int steps = 0;
};
EquivalenceProbe verify_equivalence(const SparseMatrix& A, double tau,
                                    const Eigen::MatrixXd& U_p,
                                    const Eigen::MatrixXd& V_p,
                                    const Eigen::VectorXd& rhs, int audit_cap,
                                    int max_steps);

// Second-order remainder of the single-pair correction equation: solve it
// exactly for the nearest extracted triplet, push the solution through the
// residual blocks of the other selected triplets, and compare against the
// squared residual norm. ratio = rtail_norm / r_norm^2 (zero when r is zero).
struct RtailProbe {
  double r_norm = 0.0;
  double rtail_norm = 0.0;
  double ratio = 0.0;
};
RtailProbe rtail_probe(const SparseMatrix& A, const RitzSet& ritz,
                       const std::vector<int>& selected, double tau);

// Largest canonical angle between equally sized orthonormal blocks, returned
// as its sine. Computed from the orthogonal complement, so it stays accurate
// for tiny angles. Throws std::invalid_argument on shape mismatches or
// blocks that are not orthonormal.
double largest_sin_angle(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Q);

struct AngleReport {
  double sin_u = 0.0;
  double sin_v = 0.0;
};
AngleReport subspace_angles(const Eigen::MatrixXd& U_approx,
                            const Eigen::MatrixXd& U_exact,
                            const Eigen::MatrixXd& V_approx,
                            const Eigen::MatrixXd& V_exact);

// Assembles the dense completed operators for the exact and the perturbed
// projector blocks and compares their sorted eigenvalues. The similarity
// radius delta = ||A|| (sin_u + sin_v)^2 must dominate every deviation.
struct EigenGapProbe {
  int dim = 0;
  double delta = 0.0;
  double max_deviation = 0.0;
  double sin_u = 0.0;
  double sin_v = 0.0;
};
EigenGapProbe thm8_eigen_gap(const SparseMatrix& A, double tau,
                             const Eigen::MatrixXd& U_exact,
                             const Eigen::MatrixXd& V_exact,
                             const Eigen::MatrixXd& U_pert,
                             const Eigen::MatrixXd& V_pert, int audit_cap,
                             std::uint64_t seed);

// Aggregate over randomly planted instances, one fresh matrix per trial.
// Violation semantics follow the underlying probe: curve excess for the bound
// families, a 1e-10 history or reconstruction gap for "equivalence", a tail
// ratio leaving [median/10, 10 * median] for "rtail", and an eigenvalue
// deviation past delta for "thm8".
struct AuditCaseResult {
  std::string name;
  int trials = 0;
  int skipped = 0;
  int violations = 0;
  double worst_margin = 0.0;
  std::uint64_t seed = 0;
};

// which: one of "thm3", "thm5", "thm7", "thm9" (three placements each),
// "thm8", "equivalence", "rtail", or "all". Unknown names throw
// std::invalid_argument. Deterministic for a fixed seed.
std::vector<AuditCaseResult> run_audit_suite(const std::string& which, int trials,
                                             std::uint64_t seed, int audit_cap);

}  // namespace ipjdsvd::audit
