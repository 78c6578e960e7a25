// CSR sparse matrix with a CSC mirror for deterministic transpose products,
// Matrix Market ingestion, cached norm estimates and a product tally.
#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

namespace ipjdsvd {

struct NormEstimates {
  double norm1 = 0.0;    // max absolute column sum
  double norminf = 0.0;  // max absolute row sum
  double norme = 0.0;    // sqrt(norm1 * norminf), the rough spectral-norm proxy
};

struct Coord {
  int row;
  int col;
  double value;
};

// Immutable after construction and safe to share across threads for reading.
// The one mutable cell is the product tally, a relaxed std::atomic, so
// concurrent applies on a shared handle still count exactly.
class SparseMatrix {
 public:
  // Builds from triplets; duplicate coordinates are summed. Throws
  // std::invalid_argument on out-of-range indices or non-finite values.
  SparseMatrix(int rows, int cols, std::vector<Coord> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t nonzeros() const { return static_cast<std::int64_t>(vals_.size()); }

  // y = A x (counts one product on the tally).
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  // y = A^T x (counts one product on the tally).
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& y) const;

  // Uncounted twins for report revalidation and audit oracles, which must not
  // disturb solver cost accounting.
  Eigen::VectorXd apply_unmetered(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_transpose_unmetered(const Eigen::VectorXd& y) const;

  std::uint64_t mv_count() const { return mv_counter_.load(std::memory_order_relaxed); }
  void reset_mv_count() const { mv_counter_.store(0, std::memory_order_relaxed); }

  const NormEstimates& norm_estimates() const { return norms_; }

  Eigen::MatrixXd to_dense() const;

  // Transposed copy; the new handle starts with a zero tally.
  SparseMatrix transposed() const;

  SparseMatrix(const SparseMatrix& other);
  SparseMatrix& operator=(const SparseMatrix&) = delete;
  SparseMatrix(SparseMatrix&&) = default;

 private:
  void build_mirror_and_norms();

  int rows_ = 0, cols_ = 0;
  std::vector<int> rowptr_, colind_;
  std::vector<double> vals_;
  // CSC mirror (row indices ascending within each column) so that transpose
  // products accumulate in a fixed order independent of thread count.
  std::vector<int> colptr_, rowind_;
  std::vector<double> cvals_;
  NormEstimates norms_;
  mutable std::atomic<std::uint64_t> mv_counter_{0};
};

// Reads a Matrix Market file (coordinate or array; real or integer field;
// general, symmetric or skew-symmetric storage). Unsupported header tokens
// and malformed lines raise std::runtime_error with the offending token or
// line number in the message.
SparseMatrix load_matrix_market(const std::string& path);

// Sparse handle over a dense matrix; entries with |value| <= drop_tol are
// dropped. Used by the audit harness to wrap constructed problems.
SparseMatrix sparse_from_dense(const Eigen::MatrixXd& dense, double drop_tol = 0.0);

}  // namespace ipjdsvd
