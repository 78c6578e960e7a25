#include "ipjdsvd/report.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <stdexcept>

namespace ipjdsvd::report {
namespace {

using Eigen::VectorXd;
using nlohmann::ordered_json;

std::string iso_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Shortest representation that parses back to the same double.
std::string round_trip(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void require_finite(double v, const char* field) {
  if (!std::isfinite(v))
    throw std::invalid_argument(std::string("report field is not finite: ") + field);
}

// Everything document() is about to serialize, checked up front so a
// half-written file never carries a NaN or a trace that lies about I_out.
void validate_shape(const RunReport& rep, const SparseMatrix& A) {
  const auto j = rep.sigma.size();
  if (rep.residual_norms.size() != j ||
      static_cast<Eigen::Index>(rep.converged_at.size()) != j ||
      rep.U.cols() != j || rep.V.cols() != j)
    throw std::invalid_argument("report triplet arrays disagree in length");
  if (j > 0 && (rep.U.rows() != A.rows() || rep.V.rows() != A.cols()))
    throw std::invalid_argument("report vectors do not match the matrix shape");
  if (rep.trace.size() != static_cast<std::size_t>(rep.outer_iterations))
    throw std::invalid_argument("trace length disagrees with the outer iteration count");

  for (Eigen::Index i = 0; i < j; ++i) {
    require_finite(rep.sigma[i], "sigma");
    require_finite(rep.residual_norms[i], "residual_norm");
  }
  require_finite(rep.norms.norm1, "norm1");
  require_finite(rep.norms.norminf, "norminf");
  require_finite(rep.norms.norme, "norm_estimate");
  require_finite(rep.wall_seconds, "wall_seconds");
  for (const TraceRow& row : rep.trace) {
    require_finite(row.theta1, "trace.theta1");
    require_finite(row.rnorm1, "trace.rnorm1");
    require_finite(row.rtol_inner, "trace.rtol_inner");
    require_finite(row.defl_ortho, "trace.defl_ortho");
  }
  if (j > 0 && (!rep.U.allFinite() || !rep.V.allFinite()))
    throw std::invalid_argument("report field is not finite: vectors");
}

}  // namespace

Recheck revalidate(const RunReport& rep, const SparseMatrix& A) {
  const auto j = rep.sigma.size();
  if (rep.residual_norms.size() != j || rep.U.cols() != j || rep.V.cols() != j)
    throw std::invalid_argument("report triplet arrays disagree in length");
  if (j > 0 && (rep.U.rows() != A.rows() || rep.V.rows() != A.cols()))
    throw std::invalid_argument("report vectors do not match the matrix shape");

  Recheck rc;
  const double scale = std::max(1.0, rep.norms.norme);
  const double rebuilt = std::sqrt(rep.norms.norm1 * rep.norms.norminf);
  rc.norme_deviation = std::abs(rebuilt - rep.norms.norme) / scale;
  const double threshold = rebuilt * rep.config.tol;

  for (Eigen::Index i = 0; i < j; ++i) {
    VectorXd ru = A.apply_unmetered(rep.V.col(i)) - rep.sigma[i] * rep.U.col(i);
    VectorXd rv =
        A.apply_transpose_unmetered(rep.U.col(i)) - rep.sigma[i] * rep.V.col(i);
    double fresh = std::sqrt(ru.squaredNorm() + rv.squaredNorm());
    rc.worst_residual_deviation = std::max(
        rc.worst_residual_deviation, std::abs(fresh - rep.residual_norms[i]) / scale);
    if (rep.residual_norms[i] > threshold * (1.0 + 1e-12)) rc.criterion_holds = false;
  }
  return rc;
}

nlohmann::ordered_json document(const RunReport& rep, const SparseMatrix& A,
                                const DocumentOptions& opt) {
  validate_shape(rep, A);
  Recheck rc = revalidate(rep, A);

  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  if (opt.with_timestamp) doc["generated_at"] = iso_utc_now();

  ordered_json matrix;
  matrix["path"] = opt.matrix_path;
  matrix["rows"] = A.rows();
  matrix["cols"] = A.cols();
  matrix["nonzeros"] = A.nonzeros();
  matrix["norm1"] = rep.norms.norm1;
  matrix["norminf"] = rep.norms.norminf;
  matrix["norm_estimate"] = rep.norms.norme;
  doc["matrix"] = std::move(matrix);

  const SolverConfig& cfg = rep.config;
  ordered_json config;
  config["mode"] = cfg.mode == Mode::IPJDSVD ? "ipjdsvd" : "jdsvd";
  config["tau"] = cfg.tau;
  config["num"] = cfg.ell;
  config["tol"] = cfg.tol;
  config["kmax"] = cfg.k_max;
  config["kmin"] = cfg.k_min;
  config["eps_inner"] = cfg.eps_inner;
  config["pretol1"] = cfg.pretol1;
  config["pretol2"] = cfg.pretol2;
  config["maxit_outer"] = cfg.maxit_outer;
  config["inner_maxit"] = cfg.inner_maxit;
  config["audit_cap"] = cfg.audit_cap;
  config["seed"] = cfg.seed;
  doc["config"] = std::move(config);

  doc["status"] = rep.status == SolveStatus::CONVERGED ? "converged" : "maxit_outer";
  doc["transposed"] = rep.transposed;

  ordered_json iters;
  iters["outer"] = rep.outer_iterations;
  iters["mv_products"] = rep.mv_count;
  iters["expansions"] = rep.expansions;
  iters["inner_iterations"] = rep.inner_iterations_total;
  iters["inner_inits"] = rep.inner_inits_total;
  iters["trailing_expansion_units"] = rep.trailing_expansion_units;
  iters["wall_seconds"] = opt.with_timestamp ? rep.wall_seconds : 0.0;
  doc["iterations"] = std::move(iters);

  ordered_json triplets = ordered_json::array();
  for (Eigen::Index i = 0; i < rep.sigma.size(); ++i) {
    ordered_json row;
    row["index"] = static_cast<int>(i);
    row["value"] = rep.sigma[i];
    row["residual_norm"] = rep.residual_norms[i];
    row["converged_at"] = rep.converged_at[static_cast<std::size_t>(i)];
    triplets.push_back(std::move(row));
  }
  doc["triplets"] = std::move(triplets);

  doc["inner_histories"] = rep.inner_histories;

  ordered_json trace = ordered_json::array();
  for (const TraceRow& r : rep.trace) {
    ordered_json row;
    row["outer"] = r.outer;
    row["k"] = r.k;
    row["theta1"] = r.theta1;
    row["rnorm1"] = r.rnorm1;
    row["m_selected"] = r.m_selected;
    row["rtol_inner"] = r.rtol_inner;
    row["inner_iterations"] = r.inner_iterations;
    row["inner_inits"] = r.inner_inits;
    row["restarted"] = r.restarted;
    row["k_after_restart"] = r.k_after_restart;
    row["restart_clamped"] = r.restart_clamped;
    row["deflated"] = r.deflated;
    row["purge_mvs"] = r.purge_mvs;
    row["reinits"] = r.reinits;
    row["expansion_units"] = r.expansion_units;
    row["defl_ortho"] = r.defl_ortho;
    row["mv_after"] = r.mv_after;
    trace.push_back(std::move(row));
  }
  doc["trace"] = std::move(trace);

  ordered_json reval;
  reval["norme_deviation"] = rc.norme_deviation;
  reval["worst_residual_deviation"] = rc.worst_residual_deviation;
  reval["criterion_holds"] = rc.criterion_holds;
  reval["ok"] = rc.ok();
  doc["revalidation"] = std::move(reval);

  if (opt.emit_vectors) {
    ordered_json vectors = ordered_json::array();
    for (Eigen::Index i = 0; i < rep.sigma.size(); ++i) {
      ordered_json pair;
      pair["u"] = std::vector<double>(rep.U.col(i).begin(), rep.U.col(i).end());
      pair["v"] = std::vector<double>(rep.V.col(i).begin(), rep.V.col(i).end());
      vectors.push_back(std::move(pair));
    }
    doc["vectors"] = std::move(vectors);
  }
  return doc;
}

nlohmann::ordered_json audit_document(const std::string& which, int trials,
                                      std::uint64_t seed, int audit_cap,
                                      const std::vector<audit::AuditCaseResult>& cases,
                                      bool with_timestamp) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  if (with_timestamp) doc["generated_at"] = iso_utc_now();

  ordered_json request;
  request["which"] = which;
  request["trials"] = trials;
  request["seed"] = seed;
  request["audit_cap"] = audit_cap;
  doc["audit"] = std::move(request);

  int total = 0;
  ordered_json rows = ordered_json::array();
  for (const audit::AuditCaseResult& c : cases) {
    require_finite(c.worst_margin, "worst_margin");
    ordered_json row;
    row["name"] = c.name;
    row["trials"] = c.trials;
    row["skipped"] = c.skipped;
    row["violations"] = c.violations;
    row["worst_margin"] = c.worst_margin;
    row["seed"] = c.seed;
    rows.push_back(std::move(row));
    total += c.violations;
  }
  doc["cases"] = std::move(rows);
  doc["violations_total"] = total;
  return doc;
}

std::string csv_summary(const RunReport& rep) {
  std::string out = "index,value,residual_norm\n";
  for (Eigen::Index i = 0; i < rep.sigma.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += round_trip(rep.sigma[i]);
    out += ',';
    out += round_trip(rep.residual_norms[i]);
    out += '\n';
  }
  return out;
}

}  // namespace ipjdsvd::report
