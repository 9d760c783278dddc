#include "pseopt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace pseopt {

static std::atomic<int> g_max_threads{1};

int max_threads() { return g_max_threads.load(std::memory_order_relaxed); }

void set_max_threads(int n) {
  g_max_threads.store(std::max(1, n), std::memory_order_relaxed);
}

namespace detail {

void parallel_for_impl(std::int64_t begin, std::int64_t end,
                       const std::function<void(std::int64_t, std::int64_t)>& range_fn) {
  const std::int64_t n = end - begin;
  if (n <= 0) return;
  const int workers = static_cast<int>(
      std::min<std::int64_t>(n, std::min(max_threads(), static_cast<int>(
                                             std::thread::hardware_concurrency()
                                                 ? std::thread::hardware_concurrency()
                                                 : 1))));
  if (workers <= 1) {
    range_fn(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = begin + w * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&range_fn, lo, hi] { range_fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail
}  // namespace pseopt
