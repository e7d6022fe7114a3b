#pragma once

// Minimal deterministic work-splitting helper: item i is always processed by
// exactly one thread and writes only to its own output slot, so results are
// identical for every thread count.  The first exception thrown by any
// worker is rethrown on the calling thread.

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rankshift {

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const auto nthreads = static_cast<std::size_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([t, nthreads, count, &fn, &error, &error_mutex] {
      try {
        for (std::size_t i = t; i < count; i += nthreads) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rankshift
