#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace netchoice {

// Worker count from NETCHOICE_THREADS, else 1.
inline std::size_t default_threads() {
  if (const char* env = std::getenv("NETCHOICE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

// Splits [0, n) into fixed-size chunks, computes one partial per chunk with
// `work(begin, end)`, then folds the partials left to right with `combine`.
// The chunking does not depend on the thread count, so results are bitwise
// identical for any number of threads.
template <typename Partial, typename Work, typename Combine>
Partial chunked_reduce(std::size_t n, std::size_t chunk, std::size_t threads, Partial init, Work work, Combine combine) {
  if (chunk == 0) chunk = 1;
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Partial> partials(n_chunks, init);
  auto run = [&](std::size_t c) { partials[c] = work(c * chunk, std::min(n, (c + 1) * chunk)); };

  threads = std::max<std::size_t>(1, std::min(threads, n_chunks));
  if (threads == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run(c);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t c = t; c < n_chunks; c += threads) run(c);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  Partial total = std::move(init);
  for (auto& p : partials) combine(total, p);
  return total;
}

}  // namespace netchoice
