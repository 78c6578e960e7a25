// Times the OpenMP kernel variants against their serial references on a
// synthetic CSR problem and checks that both produce byte-identical output,
// which is the property the solver's determinism rests on. Usage:
//
//   bench_kernels [rows cols nnz_per_row k reps]
//
// Exits nonzero if any parallel result differs from its serial twin.
#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "ipjdsvd/kernels.hpp"

namespace {

struct Csr {
  int rows = 0, cols = 0;
  std::vector<int> rowptr, colind;
  std::vector<double> vals;
  // CSC mirror, row indices ascending within each column.
  std::vector<int> colptr, rowind;
  std::vector<double> cvals;
};

Csr make_problem(int rows, int cols, int nnz_per_row, std::uint64_t seed) {
  Csr a;
  a.rows = rows;
  a.cols = cols;
  std::mt19937_64 eng(seed);
  std::uniform_int_distribution<int> pick(0, cols - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);

  a.rowptr.resize(rows + 1, 0);
  a.colind.reserve(static_cast<std::size_t>(rows) * nnz_per_row);
  a.vals.reserve(a.colind.capacity());
  std::vector<int> cix(nnz_per_row);
  for (int i = 0; i < rows; ++i) {
    for (int& c : cix) c = pick(eng);
    std::sort(cix.begin(), cix.end());
    for (int c : cix) {
      a.colind.push_back(c);
      a.vals.push_back(val(eng));
    }
    a.rowptr[i + 1] = static_cast<int>(a.colind.size());
  }

  // Counting-sort scatter; walking rows in order keeps rowind ascending
  // within each column, which spmv_t relies on.
  a.colptr.assign(cols + 1, 0);
  for (int c : a.colind) ++a.colptr[c + 1];
  for (int c = 0; c < cols; ++c) a.colptr[c + 1] += a.colptr[c];
  a.rowind.resize(a.colind.size());
  a.cvals.resize(a.vals.size());
  std::vector<int> cursor(a.colptr.begin(), a.colptr.end() - 1);
  for (int i = 0; i < rows; ++i)
    for (int p = a.rowptr[i]; p < a.rowptr[i + 1]; ++p) {
      int dst = cursor[a.colind[p]]++;
      a.rowind[dst] = i;
      a.cvals[dst] = a.vals[p];
    }
  return a;
}

std::vector<double> random_vec(int n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = val(eng);
  return x;
}

// Best-of-reps wall time for fn(), first call treated as warmup.
template <class F>
double best_ms(int reps, F&& fn) {
  fn();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = omp_get_wtime();
    fn();
    best = std::min(best, omp_get_wtime() - t0);
  }
  return best * 1e3;
}

bool same_bytes(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void report(const char* name, double serial_ms, double parallel_ms, bool same,
            int& bad) {
  std::printf("%-10s %10.3f ms %10.3f ms   x%-6.2f %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms,
              same ? "identical" : "DIFFER");
  if (!same) ++bad;
}

}  // namespace

int main(int argc, char** argv) {
  int rows = 120000, cols = 90000, nnz_per_row = 12, k = 8, reps = 20;
  if (argc > 1) rows = std::stoi(argv[1]);
  if (argc > 2) cols = std::stoi(argv[2]);
  if (argc > 3) nnz_per_row = std::stoi(argv[3]);
  if (argc > 4) k = std::stoi(argv[4]);
  if (argc > 5) reps = std::stoi(argv[5]);

  Csr a = make_problem(rows, cols, nnz_per_row, 7);
  std::printf("matrix %d x %d, %zu nonzeros, k = %d, best of %d reps, "
              "%d threads\n\n",
              rows, cols, a.vals.size(), k, reps, omp_get_max_threads());

  namespace kn = ipjdsvd::kernels;
  int bad = 0;

  {
    std::vector<double> x = random_vec(cols, 11);
    std::vector<double> ys(rows), yp(rows);
    double ts = best_ms(reps, [&] {
      kn::spmv_serial(rows, a.rowptr.data(), a.colind.data(), a.vals.data(),
                      x.data(), ys.data());
    });
    double tp = best_ms(reps, [&] {
      kn::spmv(rows, a.rowptr.data(), a.colind.data(), a.vals.data(), x.data(),
               yp.data());
    });
    report("spmv", ts, tp, same_bytes(ys, yp), bad);
  }
  {
    std::vector<double> x = random_vec(rows, 12);
    std::vector<double> ys(cols), yp(cols);
    double ts = best_ms(reps, [&] {
      kn::spmv_t_serial(cols, a.colptr.data(), a.rowind.data(), a.cvals.data(),
                        x.data(), ys.data());
    });
    double tp = best_ms(reps, [&] {
      kn::spmv_t(cols, a.colptr.data(), a.rowind.data(), a.cvals.data(),
                 x.data(), yp.data());
    });
    report("spmv_t", ts, tp, same_bytes(ys, yp), bad);
  }
  {
    std::vector<double> Q = random_vec(rows * k, 13);
    std::vector<double> x = random_vec(rows, 14);
    std::vector<double> ys(k), yp(k);
    double ts = best_ms(
        reps, [&] { kn::gemv_t_serial(rows, k, Q.data(), x.data(), ys.data()); });
    double tp =
        best_ms(reps, [&] { kn::gemv_t(rows, k, Q.data(), x.data(), yp.data()); });
    report("gemv_t", ts, tp, same_bytes(ys, yp), bad);
  }
  {
    std::vector<double> Q = random_vec(rows * k, 15);
    std::vector<double> y = random_vec(k, 16);
    std::vector<double> x0 = random_vec(rows, 17);
    std::vector<double> xs, xp;
    double ts = best_ms(reps, [&] {
      xs = x0;
      kn::gemv_sub_serial(rows, k, Q.data(), y.data(), xs.data());
    });
    double tp = best_ms(reps, [&] {
      xp = x0;
      kn::gemv_sub(rows, k, Q.data(), y.data(), xp.data());
    });
    report("gemv_sub", ts, tp, same_bytes(xs, xp), bad);
  }

  if (bad) std::printf("\n%d kernel(s) diverged from the serial reference\n", bad);
  return bad;
}
