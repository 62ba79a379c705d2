#include "ecgforge/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>

namespace ecgforge {

namespace {
std::atomic<int> g_threads{0};  // 0 = decide from hardware
}

int thread_count() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n > 0) return n;
  return std::max(1, omp_get_max_threads());
}

void set_thread_count(int n) { g_threads.store(n, std::memory_order_relaxed); }

int parallel_chunks(std::int64_t n) {
  return static_cast<int>(std::min<std::int64_t>(n, thread_count()));
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t, int)>& body) {
  if (n <= 0) return;
  int chunks = parallel_chunks(n);
  if (chunks <= 1) {
    body(0, n, 0);
    return;
  }
#pragma omp parallel for num_threads(chunks) schedule(static, 1)
  for (int c = 0; c < chunks; ++c) {
    std::int64_t begin = n * c / chunks;
    std::int64_t end = n * (c + 1) / chunks;
    if (begin < end) body(begin, end, c);
  }
}

}  // namespace ecgforge
