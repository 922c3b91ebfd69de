// Copyright 2026 The cmj Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Work splitting whose results never depend on the number of threads: items are
// cut into fixed-size chunks, each chunk's result lands in its own slot, and
// callers reduce slots in index order.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace cmj {

/// Thread count from CMJ_THREADS, else the hardware concurrency.
inline unsigned default_threads() {
  if (const char* env = std::getenv("CMJ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(chunk, begin, end) for every chunk of [0, n_items) and returns the
/// per-chunk results in chunk order.
template <class Fn>
auto parallel_chunks(std::size_t n_items, std::size_t chunk_size, unsigned threads, Fn&& fn) {
  using Result = decltype(fn(std::size_t{}, std::size_t{}, std::size_t{}));
  chunk_size = std::max<std::size_t>(1, chunk_size);
  const std::size_t n_chunks = (n_items + chunk_size - 1) / chunk_size;
  std::vector<Result> results(n_chunks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        const std::size_t begin = c * chunk_size;
        results[c] = fn(c, begin, std::min(n_items, begin + chunk_size));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_chunks);
      }
    }
  };

  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n_chunks));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace cmj
