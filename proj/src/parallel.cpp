#include "dcm/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dcm {

namespace {
int g_thread_cap = 0;
}

void set_thread_cap(int n) {
  g_thread_cap = std::max(0, n);
#ifdef _OPENMP
  if (g_thread_cap > 0) omp_set_num_threads(g_thread_cap);
#endif
}

int thread_cap() { return g_thread_cap; }

void tree_reduce_rows(double* rows, std::size_t n, std::size_t w) {
  if (n == 0) return;
  for (std::size_t stride = 1; stride < n; stride *= 2) {
    const std::size_t step = 2 * stride;
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); i += static_cast<long long>(step)) {
      const std::size_t lhs = static_cast<std::size_t>(i);
      const std::size_t rhs = lhs + stride;
      if (rhs < n) {
        double* a = rows + lhs * w;
        const double* b = rows + rhs * w;
        for (std::size_t k = 0; k < w; ++k) a[k] += b[k];
      }
    }
  }
}

}  // namespace dcm
