#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace defilab {

/// Worker count used by the deterministic parallel paths (default 1).
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, count). Work is split into contiguous chunks, one
/// per worker; callers write results into per-index slots so the outcome does
/// not depend on the worker count. The first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace defilab
