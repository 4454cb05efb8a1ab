#pragma once

#include <cstddef>
#include <functional>

namespace mfm {

// Worker count: hardware concurrency capped by the MFM_THREADS env var.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; results
// must not depend on execution order (callers reduce in index order).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mfm
