#pragma once

#include <cstddef>
#include <functional>

namespace ldmaps {

/// Worker count for internal parallel loops. Defaults to LDMAPS_THREADS when
/// set, otherwise std::thread::hardware_concurrency().
unsigned thread_count();
void set_thread_count(unsigned n);

/// Calls body(begin, end) on contiguous chunks of [0, n). Chunks run on up to
/// thread_count() threads; body must only write to chunk-owned state.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace ldmaps
