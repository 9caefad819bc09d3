#pragma once

#include <cstddef>
#include <functional>

namespace losstomo {

// Worker count: LOSSTOMO_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Runs body(i) for i in [0, count) on up to `workers` threads. Indices are
// handed out dynamically; callers must make body(i) independent of which
// thread runs it. Exceptions from body are rethrown on the calling thread.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace losstomo
