#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace uap {

/// How per-image loops execute. Serial by default; parallel mode must be
/// bit-identical to serial, so callers write results by index and reduce in
/// index order afterwards.
struct ExecPolicy {
  bool parallel = false;
  unsigned threads = 0;  // 0: hardware_concurrency

  unsigned worker_count(std::size_t n) const {
    if (!parallel || n < 2) return 1;
    unsigned w = threads != 0 ? threads : std::thread::hardware_concurrency();
    if (w == 0) w = 1;
    return static_cast<unsigned>(std::min<std::size_t>(w, n));
  }
};

/// Runs fn(i) for i in [0, n), either inline or on a small worker group with
/// an atomic work index. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(std::size_t n, const ExecPolicy& exec, Fn&& fn) {
  const unsigned workers = exec.worker_count(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace uap
