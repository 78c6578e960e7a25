#include "ipjdsvd/sparse_matrix.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ipjdsvd/kernels.hpp"

namespace ipjdsvd {

namespace {

[[noreturn]] void fail_load(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

[[noreturn]] void fail_line(const std::string& path, long line, const std::string& what) {
  throw std::runtime_error(path + ": line " + std::to_string(line) + ": " + what);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<Coord> entries)
    : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative dimension");
  for (const Coord& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw std::invalid_argument("entry (" + std::to_string(e.row) + "," +
                                  std::to_string(e.col) + ") outside " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
    if (!std::isfinite(e.value))
      throw std::invalid_argument("non-finite value at (" + std::to_string(e.row) +
                                  "," + std::to_string(e.col) + ")");
  }
  std::sort(entries.begin(), entries.end(), [](const Coord& a, const Coord& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  rowptr_.assign(rows + 1, 0);
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    double sum = entries[i].value;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      sum += entries[j].value;
      ++j;
    }
    colind_.push_back(entries[i].col);
    vals_.push_back(sum);
    ++rowptr_[entries[i].row + 1];
    i = j;
  }
  for (int r = 0; r < rows; ++r) rowptr_[r + 1] += rowptr_[r];
  build_mirror_and_norms();
}

SparseMatrix::SparseMatrix(const SparseMatrix& other)
    : rows_(other.rows_),
      cols_(other.cols_),
      rowptr_(other.rowptr_),
      colind_(other.colind_),
      vals_(other.vals_),
      colptr_(other.colptr_),
      rowind_(other.rowind_),
      cvals_(other.cvals_),
      norms_(other.norms_) {}  // fresh tally on the copy

void SparseMatrix::build_mirror_and_norms() {
  // counting sort by column; iterating rows in order keeps row indices
  // ascending within each column
  colptr_.assign(cols_ + 1, 0);
  for (int c : colind_) ++colptr_[c + 1];
  for (int c = 0; c < cols_; ++c) colptr_[c + 1] += colptr_[c];
  rowind_.assign(vals_.size(), 0);
  cvals_.assign(vals_.size(), 0.0);
  std::vector<int> next(colptr_.begin(), colptr_.end() - 1);
  for (int r = 0; r < rows_; ++r) {
    for (int p = rowptr_[r]; p < rowptr_[r + 1]; ++p) {
      int dst = next[colind_[p]]++;
      rowind_[dst] = r;
      cvals_[dst] = vals_[p];
    }
  }

  std::vector<double> colsum(cols_, 0.0);
  double rowmax = 0.0;
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int p = rowptr_[r]; p < rowptr_[r + 1]; ++p) {
      s += std::abs(vals_[p]);
      colsum[colind_[p]] += std::abs(vals_[p]);
    }
    rowmax = std::max(rowmax, s);
  }
  norms_.norminf = rowmax;
  norms_.norm1 = colsum.empty() ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
  norms_.norme = std::sqrt(norms_.norm1 * norms_.norminf);
}

Eigen::VectorXd SparseMatrix::apply_unmetered(const Eigen::VectorXd& x) const {
  if (x.size() != cols_)
    throw std::invalid_argument("apply: vector length " + std::to_string(x.size()) +
                                ", matrix has " + std::to_string(cols_) + " columns");
  Eigen::VectorXd y(rows_);
  kernels::spmv(rows_, rowptr_.data(), colind_.data(), vals_.data(), x.data(),
                y.data());
  return y;
}

Eigen::VectorXd SparseMatrix::apply_transpose_unmetered(const Eigen::VectorXd& y) const {
  if (y.size() != rows_)
    throw std::invalid_argument("apply_transpose: vector length " +
                                std::to_string(y.size()) + ", matrix has " +
                                std::to_string(rows_) + " rows");
  Eigen::VectorXd z(cols_);
  kernels::spmv_t(cols_, colptr_.data(), rowind_.data(), cvals_.data(), y.data(),
                  z.data());
  return z;
}

Eigen::VectorXd SparseMatrix::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = apply_unmetered(x);
  mv_counter_.fetch_add(1, std::memory_order_relaxed);
  return y;
}

Eigen::VectorXd SparseMatrix::apply_transpose(const Eigen::VectorXd& y) const {
  Eigen::VectorXd z = apply_transpose_unmetered(y);
  mv_counter_.fetch_add(1, std::memory_order_relaxed);
  return z;
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int p = rowptr_[r]; p < rowptr_[r + 1]; ++p) d(r, colind_[p]) = vals_[p];
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Coord> entries;
  entries.reserve(vals_.size());
  for (int r = 0; r < rows_; ++r)
    for (int p = rowptr_[r]; p < rowptr_[r + 1]; ++p)
      entries.push_back({colind_[p], r, vals_[p]});
  return SparseMatrix(cols_, rows_, std::move(entries));
}

SparseMatrix sparse_from_dense(const Eigen::MatrixXd& dense, double drop_tol) {
  std::vector<Coord> entries;
  for (int j = 0; j < dense.cols(); ++j)
    for (int i = 0; i < dense.rows(); ++i)
      if (std::abs(dense(i, j)) > drop_tol)
        entries.push_back({i, j, dense(i, j)});
  return SparseMatrix(static_cast<int>(dense.rows()), static_cast<int>(dense.cols()),
                      std::move(entries));
}

SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_load(path, "cannot open file");

  std::string banner;
  if (!std::getline(in, banner)) fail_load(path, "empty file");
  std::istringstream hs(banner);
  std::string mm, object, format, field, symmetry;
  hs >> mm >> object >> format >> field >> symmetry;
  if (lower(mm) != "%%matrixmarket" || lower(object) != "matrix")
    fail_line(path, 1, "not a Matrix Market matrix header");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array")
    fail_line(path, 1, "unsupported format '" + format + "'");
  if (field != "real" && field != "integer")
    fail_line(path, 1, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
    fail_line(path, 1, "unsupported symmetry '" + symmetry + "'");

  long lineno = 1;
  std::string line;
  auto next_content_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t pos = line.find_first_not_of(" \t\r\n");
      if (pos == std::string::npos) continue;
      if (line[pos] == '%') continue;
      return true;
    }
    return false;
  };

  if (!next_content_line()) fail_load(path, "missing size line");
  std::istringstream ss(line);
  long M = 0, N = 0, declared = 0;
  std::vector<Coord> entries;

  if (format == "coordinate") {
    if (!(ss >> M >> N >> declared) || M < 0 || N < 0 || declared < 0)
      fail_line(path, lineno, "bad coordinate size line");
    std::string extra;
    if (ss >> extra) fail_line(path, lineno, "trailing tokens on size line");
    entries.reserve(static_cast<std::size_t>(declared) * (symmetry == "general" ? 1 : 2));
    for (long e = 0; e < declared; ++e) {
      if (!next_content_line())
        fail_load(path, "expected " + std::to_string(declared) + " entries, got " +
                            std::to_string(e));
      std::istringstream es(line);
      long i = 0, j = 0;
      double v = 0.0;
      if (!(es >> i >> j >> v)) fail_line(path, lineno, "malformed entry");
      std::string rest;
      if (es >> rest) fail_line(path, lineno, "trailing tokens");
      if (i < 1 || i > M || j < 1 || j > N)
        fail_line(path, lineno, "index out of range");
      if (!std::isfinite(v)) fail_line(path, lineno, "non-finite value");
      if (symmetry == "skew-symmetric" && i == j)
        fail_line(path, lineno, "diagonal entry in skew-symmetric file");
      entries.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
      if (i != j && symmetry == "symmetric")
        entries.push_back({static_cast<int>(j - 1), static_cast<int>(i - 1), v});
      if (i != j && symmetry == "skew-symmetric")
        entries.push_back({static_cast<int>(j - 1), static_cast<int>(i - 1), -v});
    }
  } else {  // array
    if (!(ss >> M >> N) || M < 0 || N < 0)
      fail_line(path, lineno, "bad array size line");
    if (symmetry != "general" && M != N)
      fail_line(path, lineno, "symmetric array storage requires a square matrix");
    auto read_value = [&]() -> double {
      if (!next_content_line()) fail_load(path, "array data ended early");
      std::istringstream vs(line);
      double v = 0.0;
      if (!(vs >> v)) fail_line(path, lineno, "malformed array value");
      if (!std::isfinite(v)) fail_line(path, lineno, "non-finite value");
      return v;
    };
    for (long j = 0; j < N; ++j) {
      long i0 = (symmetry == "general") ? 0 : (symmetry == "symmetric" ? j : j + 1);
      for (long i = i0; i < M; ++i) {
        double v = read_value();
        if (v != 0.0) {
          entries.push_back({static_cast<int>(i), static_cast<int>(j), v});
          if (i != j && symmetry == "symmetric")
            entries.push_back({static_cast<int>(j), static_cast<int>(i), v});
          if (i != j && symmetry == "skew-symmetric")
            entries.push_back({static_cast<int>(j), static_cast<int>(i), -v});
        }
      }
    }
  }

  if (next_content_line()) fail_line(path, lineno, "unexpected extra data");
  try {
    return SparseMatrix(static_cast<int>(M), static_cast<int>(N), std::move(entries));
  } catch (const std::invalid_argument& ex) {
    fail_load(path, ex.what());
  }
}

}  // namespace ipjdsvd
