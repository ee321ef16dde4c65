#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace bearline {

// Worker count: BEARLINE_THREADS caps it; falls back to hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("BEARLINE_THREADS")) {
    const long requested = std::strtol(env, nullptr, 10);
    if (requested >= 1 && static_cast<unsigned>(requested) < hw) return static_cast<unsigned>(requested);
    if (requested >= 1) return static_cast<unsigned>(requested);
  }
  return hw;
}

// Index-parallel loop. Each index is processed exactly once; results must be
// written to per-index slots so aggregation order stays deterministic.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace bearline
