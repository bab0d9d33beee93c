#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ftle {

inline std::size_t default_worker_count() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Splits [0, n) into contiguous chunks of `chunk` indices and hands them out
// to `workers` workers through a shared counter. The calling thread is one of
// the workers. fn(begin, end) must only write state owned by its range.
// The first exception thrown by any worker is rethrown after all workers join.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t workers, std::size_t chunk, Fn&& fn) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(chunk, 1);
  workers = std::max<std::size_t>(workers, 1);
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  workers = std::min(workers, nchunks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto drain = [&] {
    try {
      for (;;) {
        const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
        if (c >= nchunks) break;
        const std::size_t begin = c * chunk;
        fn(begin, std::min(n, begin + chunk));
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(nchunks, std::memory_order_relaxed);
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(drain);
    drain();
  }  // joins

  if (failure) std::rethrow_exception(failure);
}

}  // namespace ftle
