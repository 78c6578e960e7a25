// Machine-readable run reports: a versioned JSON document with keys in a
// fixed order (so identical runs serialize to identical bytes), a CSV summary
// of the converged triplets, and a revalidation pass that recomputes the
// stored aggregates from scratch before anything is written to disk.
#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "ipjdsvd/audit.hpp"
#include "ipjdsvd/solver.hpp"
#include "ipjdsvd/sparse_matrix.hpp"

namespace ipjdsvd::report {

inline constexpr int kSchemaVersion = 1;

struct DocumentOptions {
  // false drops the generated_at stamp and zeroes wall_seconds, the two
  // fields that vary between otherwise identical runs.
  bool with_timestamp = true;
  // Singular vectors dominate the output size, so they are opt-in.
  bool emit_vectors = false;
  // Echoed verbatim under matrix.path; leave empty for constructed inputs.
  std::string matrix_path;
};

// Independent re-check of a finished run: the norm estimate is rebuilt from
// its factors, every stored residual norm is recomputed with fresh unmetered
// products, and the stop criterion is re-tested against the rebuilt
// threshold. Deviations are scaled by max(1, ||A||_e), the natural size of
// the quantities involved.
struct Recheck {
  double norme_deviation = 0.0;
  double worst_residual_deviation = 0.0;
  bool criterion_holds = true;
  bool ok() const {
    return criterion_holds && norme_deviation <= 1e-12 &&
           worst_residual_deviation <= 1e-12;
  }
};
Recheck revalidate(const RunReport& rep, const SparseMatrix& A);

// Serializes a run against the matrix it was computed from. The revalidation
// outcome is embedded under "revalidation". Throws std::invalid_argument on
// non-finite numeric fields or when the trace length disagrees with the
// outer iteration count, so a malformed report never reaches disk.
nlohmann::ordered_json document(const RunReport& rep, const SparseMatrix& A,
                                const DocumentOptions& opt = {});

// Serializes an audit run: the request that produced it plus one entry per
// case with trial, skip and violation counts, the worst margin and the seed
// that replays the case.
nlohmann::ordered_json audit_document(const std::string& which, int trials,
                                      std::uint64_t seed, int audit_cap,
                                      const std::vector<audit::AuditCaseResult>& cases,
                                      bool with_timestamp = true);

// One line per converged triplet ("index,value,residual_norm" header
// included); doubles are printed in shortest round-trip form.
std::string csv_summary(const RunReport& rep);

}  // namespace ipjdsvd::report
