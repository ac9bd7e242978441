#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace warmstart {

// Index-based parallel loop. Work items must be independent; callers that
// need determinism collect results by index.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> threads;
  int count = std::min(workers, n);
  threads.reserve(count);
  for (int t = 0; t < count; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

}  // namespace warmstart
