#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mcflab {

// Global worker-thread count for the parallel kernels.  0 = library default
// (OpenMP's own default).  Results are bitwise independent of this setting:
// parallel loops only write disjoint indices and reductions are folded
// serially in index order.
void set_threads(int n);
int thread_count();

template <class F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
    const int nt = thread_count();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace mcflab
