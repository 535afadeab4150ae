#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace patchhar {

// Runs f(i) for i in [0, n) over `threads` contiguous chunks. Each chunk is
// processed in index order, and chunk boundaries depend only on (n, threads),
// so any reduction that combines per-chunk results in chunk order is
// deterministic for a fixed thread count. The first exception thrown by any
// worker is rethrown on the caller's thread.
template <typename F>
void parallel_for(int n, int threads, F&& f) {
  threads = std::max(1, std::min(threads, n));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    pool.emplace_back([&, t, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Chunk boundaries used by parallel_for, exposed so gradient reductions can
// accumulate per-chunk buffers in a fixed order.
inline std::vector<std::pair<int, int>> chunk_ranges(int n, int threads) {
  threads = std::max(1, std::min(threads, n));
  const int chunk = (n + threads - 1) / threads;
  std::vector<std::pair<int, int>> out;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo < hi) out.emplace_back(lo, hi);
  }
  return out;
}

}  // namespace patchhar
