#pragma once

#include <cstddef>
#include <vector>

namespace dcm {

// Serial is the reference implementation: a plain left-to-right loop.
// Parallel fills a per-situation buffer with OpenMP and folds it with a
// pairwise tree whose order is fixed by situation index, so the result is
// bit-stable across thread counts.
enum class Exec { Serial, Parallel };

void set_thread_cap(int n);  // 0 = hardware default
int thread_cap();

// In-place pairwise tree fold of n rows of width w stored contiguously;
// the sum lands in rows[0..w).
void tree_reduce_rows(double* rows, std::size_t n, std::size_t w);

// Evaluates fill(i, row_i) for every i and returns the (tree-)reduced row.
// fill must be safe to call concurrently for distinct i.
template <typename Fill>
std::vector<double> map_reduce_rows(std::size_t n, std::size_t w, Exec exec,
                                    Fill&& fill) {
  if (exec == Exec::Serial) {
    std::vector<double> acc(w, 0.0), row(w);
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      fill(i, row.data());
      for (std::size_t k = 0; k < w; ++k) acc[k] += row[k];
    }
    return acc;
  }
  std::vector<double> buf(n * w, 0.0);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    fill(static_cast<std::size_t>(i), buf.data() + static_cast<std::size_t>(i) * w);
  tree_reduce_rows(buf.data(), n, w);
  std::vector<double> out(buf.begin(), buf.begin() + w);
  return out;
}

}  // namespace dcm
