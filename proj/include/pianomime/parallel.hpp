#pragma once

#include <cstddef>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace pianomime {

// Thread-count resolution: jobs == 0 means "all available", jobs == 1 selects
// the serial reference path, jobs > 1 requests that many OpenMP threads.
inline int resolve_jobs(int jobs) {
  if (jobs < 0) throw std::invalid_argument("jobs must be >= 0");
#if defined(_OPENMP)
  if (jobs == 0) return omp_get_max_threads();
  return jobs;
#else
  return 1;
#endif
}

// Data-parallel loop over [0, n). The body must write only to state owned by
// index i (result slots, per-item buffers) so that serial and parallel
// execution produce bitwise-identical results.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  const int threads = resolve_jobs(jobs);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<std::size_t>(i));
  }
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace pianomime
