#pragma once

#include <cstddef>
#include <functional>

namespace lcf {

/// Worker count: --threads flag > LCFIELD_THREADS env > hardware concurrency.
int default_thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [0, n) on a static partition of worker threads.
/// Callers store per-index results and reduce serially in index order, so
/// every derived number is bit-identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace lcf
