#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace pap {

/// Number of worker threads used by row-parallel kernels. 0 means
/// std::thread::hardware_concurrency().
void set_worker_threads(unsigned n) noexcept;
unsigned worker_threads() noexcept;

/// Calls fn(row) for row in [begin, end), split into contiguous blocks across
/// worker threads. Each row is written by exactly one thread, so results do
/// not depend on the thread count.
template <typename Fn>
void parallel_rows(int begin, int end, Fn&& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = std::clamp(static_cast<int>(worker_threads()), 1, n);
  if (workers == 1) {
    for (int r = begin; r < end; ++r) fn(r);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + static_cast<int>(static_cast<long long>(n) * w / workers);
    const int hi = begin + static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int r = lo; r < hi; ++r) fn(r);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace pap
