#include "babplan/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace babplan {

namespace {
std::atomic<int> g_override{0};

int detect_threads() {
  if (const char* env = std::getenv("BABPLAN_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}
}  // namespace

int thread_count() {
  const int o = g_override.load(std::memory_order_relaxed);
  if (o > 0) return o;
  static const int detected = detect_threads();
  return detected;
}

void set_thread_count(int n) { g_override.store(n < 0 ? 0 : n, std::memory_order_relaxed); }

void parallel_chunks(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = std::min<std::int64_t>(thread_count(), n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t b = w * chunk;
    const std::int64_t e = std::min<std::int64_t>(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace babplan
