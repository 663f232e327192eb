#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace wqed {

// WQED_THREADS overrides the default of one worker.
inline int default_thread_count() {
  if (const char* env = std::getenv("WQED_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

// Static partition of [0, n) into contiguous chunks, one per thread. Each index is
// processed by exactly one call, so per-index results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f, std::size_t min_chunk = 16384) {
  const std::size_t max_threads = std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk));
  const std::size_t t = std::min<std::size_t>(std::max(threads, 1), max_threads);
  if (t <= 1) {
    f(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t - 1);
  const std::size_t chunk = (n + t - 1) / t;
  for (std::size_t i = 1; i < t; ++i) {
    const std::size_t b = std::min(n, i * chunk), e = std::min(n, (i + 1) * chunk);
    pool.emplace_back([&f, b, e] { f(b, e); });
  }
  f(std::size_t{0}, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

}  // namespace wqed
