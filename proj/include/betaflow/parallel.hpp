#pragma once

#include <cstddef>
#include <functional>

namespace betaflow {

// Resolves a thread-count request: 0 means auto (hardware concurrency,
// overridable through the BETAFLOW_THREADS environment variable).
int resolve_threads(int requested);

// Runs fn(i) for i in [0, count). Work items must write only to their own
// slots; scheduling order is unspecified but results must not depend on it.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace betaflow
