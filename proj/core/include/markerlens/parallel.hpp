#pragma once

#include <cstddef>
#include <functional>

namespace markerlens {

// Worker count for parallel_for: MARKERLENS_THREADS env var caps it,
// 0 or unset means hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n). Work items must be independent; callers get
// determinism by writing results into slot i rather than appending.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace markerlens
