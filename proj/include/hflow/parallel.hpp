#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hflow {

// Kernels below parallelize over output indices only: every iteration writes
// a disjoint slot and any reduction is finished serially in index order, so
// results are bitwise identical for every thread count.
inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace hflow
