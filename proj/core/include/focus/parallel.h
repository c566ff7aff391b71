#pragma once

#include <cstddef>
#include <functional>

namespace focus {

// Calls fn(i) for every i in [0, n) using at most `jobs` threads (the caller
// counts as one). Indices are handed out in increasing order. If any call
// throws, no new indices are started and, once running calls finish, the
// exception of the lowest failing index is rethrown, the same one a serial
// loop would have raised.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Hardware concurrency, at least 1.
int default_jobs();

}  // namespace focus
