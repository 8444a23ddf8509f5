#pragma once

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isoquad::par {

// Worker cap: ISOQUAD_THREADS wins when set, otherwise the OpenMP default.
inline int thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("ISOQUAD_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Parallel loop over independent slots. Callers must write only to
// slot-indexed storage; reductions happen afterwards in index order, so
// results do not depend on the schedule or the thread count.
template <class F>
void parallel_for(long long n, F&& f) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
  for (long long i = 0; i < n; ++i) f(i);
#else
  for (long long i = 0; i < n; ++i) f(i);
#endif
}

// Serial reference path, kept so tests can compare against the parallel one.
template <class F>
void serial_for(long long n, F&& f) {
  for (long long i = 0; i < n; ++i) f(i);
}

}  // namespace isoquad::par
