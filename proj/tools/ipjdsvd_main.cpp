// Command line front end. Two modes of operation: factor a Matrix Market
// file (--matrix) or run the verification suite (--audit). Either way the
// outcome lands on stdout as a small table and, on request, on disk as a
// versioned JSON document and a CSV summary.
//
// Exit codes: 0 full convergence (or an audit with zero violations),
// 2 partial convergence or audit violations, 1 usage or input errors.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "ipjdsvd/audit.hpp"
#include "ipjdsvd/report.hpp"
#include "ipjdsvd/solver.hpp"
#include "ipjdsvd/sparse_matrix.hpp"

namespace {

using namespace ipjdsvd;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

int run_solve(const std::string& matrix_path, const SolverConfig& cfg,
              const std::string& report_path, const std::string& csv_path,
              bool emit_vectors, bool no_timestamp) {
  SparseMatrix A = load_matrix_market(matrix_path);
  RunReport rep = solve(A, cfg);

  std::printf("matrix: %d x %d, %lld nonzeros, ||A||_e = %.6e\n", A.rows(), A.cols(),
              static_cast<long long>(A.nonzeros()), rep.norms.norme);
  std::printf("status: %s, %d of %d triplets locked\n",
              rep.status == SolveStatus::CONVERGED ? "converged" : "hit maxit-outer",
              static_cast<int>(rep.sigma.size()), cfg.ell);
  if (rep.sigma.size() > 0) {
    std::printf("  #                 sigma    residual   locked at\n");
    for (Eigen::Index i = 0; i < rep.sigma.size(); ++i)
      std::printf("%3d  %20.14e  %10.3e  %10d\n", static_cast<int>(i), rep.sigma[i],
                  rep.residual_norms[i], rep.converged_at[static_cast<std::size_t>(i)]);
  }
  std::printf("outer %d  MVs %llu  wall %.3fs\n", rep.outer_iterations,
              static_cast<unsigned long long>(rep.mv_count), rep.wall_seconds);

  report::Recheck rc = report::revalidate(rep, A);
  if (!rc.ok())
    std::fprintf(stderr,
                 "warning: revalidation failed (norm deviation %.3e, residual "
                 "deviation %.3e)\n",
                 rc.norme_deviation, rc.worst_residual_deviation);

  if (!report_path.empty()) {
    report::DocumentOptions opt;
    opt.with_timestamp = !no_timestamp;
    opt.emit_vectors = emit_vectors;
    opt.matrix_path = matrix_path;
    write_text_file(report_path, report::document(rep, A, opt).dump(2) + "\n");
  }
  if (!csv_path.empty()) write_text_file(csv_path, report::csv_summary(rep));

  return rep.status == SolveStatus::CONVERGED ? 0 : 2;
}

int run_audit(const std::string& which, int trials, std::uint64_t seed, int audit_cap,
              const std::string& report_path, bool no_timestamp) {
  auto results = audit::run_audit_suite(which, trials, seed, audit_cap);

  std::printf("audit %s: %d trials per case, seed %llu\n", which.c_str(), trials,
              static_cast<unsigned long long>(seed));
  std::printf("case           trials  skipped  violations  worst margin\n");
  int total = 0;
  for (const audit::AuditCaseResult& c : results) {
    std::printf("%-14s %6d  %7d  %10d  %12.3e\n", c.name.c_str(), c.trials, c.skipped,
                c.violations, c.worst_margin);
    total += c.violations;
  }
  std::printf("total violations: %d\n", total);

  if (!report_path.empty())
    write_text_file(report_path,
                    report::audit_document(which, trials, seed, audit_cap, results,
                                           !no_timestamp)
                            .dump(2) +
                        "\n");

  return total == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial SVD nearest a target, Jacobi-Davidson style"};

  SolverConfig cfg;  // flag defaults come straight from the solver's own
  std::string matrix_path, report_path, csv_path, audit_case;
  std::string mode = "ipjdsvd";
  int num = 1;
  int trials = 50;
  bool emit_vectors = false, no_timestamp = false;

  app.add_option("--matrix", matrix_path, "Matrix Market file to factor");
  app.add_option("--tau", cfg.tau, "target value; nearest triplets converge first")
      ->capture_default_str();
  app.add_option("--num", num, "number of singular triplets")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--tol", cfg.tol, "outer tolerance, scaled by ||A||_e")
      ->capture_default_str();
  app.add_option("--kmax", cfg.k_max, "restart threshold")->capture_default_str();
  app.add_option("--kmin", cfg.k_min, "dimension kept at restart")->capture_default_str();
  app.add_option("--pretol1", cfg.pretol1, "cluster gate on |theta - tau|")
      ->capture_default_str();
  app.add_option("--pretol2", cfg.pretol2, "cluster gate on residual norms")
      ->capture_default_str();
  app.add_option("--eps-inner", cfg.eps_inner, "accuracy of expansion vectors")
      ->capture_default_str();
  app.add_option("--mode", mode, "correction equation variant")
      ->check(CLI::IsMember({"jdsvd", "ipjdsvd"}))
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "random stream for reinitializations")
      ->capture_default_str();
  app.add_option("--maxit-outer", cfg.maxit_outer,
                 "cap on correction solves; 0 means 500 per triplet")
      ->capture_default_str();
  app.add_option("--report", report_path, "write a JSON report here");
  app.add_option("--csv", csv_path, "write a CSV triplet summary here");
  app.add_flag("--emit-vectors", emit_vectors, "include singular vectors in the report");
  app.add_flag("--no-timestamp", no_timestamp,
               "omit time-dependent fields for byte-reproducible reports");
  app.add_option("--audit", audit_case,
                 "run the verification suite instead: thm3, thm5, thm7, thm8, thm9, "
                 "equivalence, rtail or all");
  app.add_option("--trials", trials, "audit trials per case")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--audit-cap", cfg.audit_cap, "dense-assembly dimension limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);       // prints help or the parse diagnostic
    return code == 0 ? 0 : 1;     // any actual parse failure is a usage error
  }

  cfg.ell = num;
  cfg.mode = mode == "jdsvd" ? Mode::JDSVD : Mode::IPJDSVD;

  try {
    if (!audit_case.empty())
      return run_audit(audit_case, trials, cfg.seed, cfg.audit_cap, report_path,
                       no_timestamp);
    if (matrix_path.empty()) {
      std::fprintf(stderr, "error: either --matrix or --audit is required\n");
      return 1;
    }
    return run_solve(matrix_path, cfg, report_path, csv_path, emit_vectors,
                     no_timestamp);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
