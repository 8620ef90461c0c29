#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ridgeline {

/// Maximum worker count: min(hardware, RIDGELINE_THREADS if set).
/// RIDGELINE_THREADS=1 forces serial execution.
inline int max_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  int n = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("RIDGELINE_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

/// Runs body(i) for i in [0, n) over contiguous index chunks.  Callers that
/// need results independent of RIDGELINE_THREADS must write per-index slots
/// and reduce serially afterwards (the library's own reductions do exactly
/// that).  Exceptions from workers are captured and the first one rethrown.
template <typename Body>
void parallel_for(std::ptrdiff_t n, Body&& body) {
  if (n <= 0) return;
  int workers = std::min<std::ptrdiff_t>(max_threads(), n);
  if (workers <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::ptrdiff_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(w) * chunk;
    std::ptrdiff_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::ptrdiff_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ridgeline
