#include "lcf/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lcf {

namespace {
std::atomic<int> g_threads{0};  // 0 = not configured

int resolve_default() {
  if (const char* env = std::getenv("LCFIELD_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? int(hc) : 1;
}
}  // namespace

int default_thread_count() {
  const int n = g_threads.load();
  return n >= 1 ? n : resolve_default();
}

void set_thread_count(int n) { g_threads.store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int workers = default_thread_count();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int spawn = int(std::min<std::size_t>(std::size_t(workers), n)) - 1;
  pool.reserve(std::size_t(spawn));
  for (int t = 0; t < spawn; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

}  // namespace lcf
