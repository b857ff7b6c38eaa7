#pragma once

#include <cstddef>
#include <functional>

namespace bdb {

/// Worker count used by mode-parallel loops. Defaults to 1; the CLI sets it from
/// --threads or BDB_THREADS.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; no reduction
/// happens across workers, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bdb
