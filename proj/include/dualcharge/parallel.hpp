#pragma once

// Minimal fork-join helper for embarrassingly parallel index loops (sampler
// chains, multistart descents). Worker count comes from the
// DUALCHARGE_THREADS environment variable when set, otherwise from the
// hardware concurrency. Callers write results into per-index slots and
// aggregate in a fixed order afterwards, so the schedule never changes the
// result.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace dualcharge {

inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("DUALCHARGE_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) n = static_cast<unsigned>(parsed);
  }
  if (n < 1) n = 1;
  if (jobs < n) n = static_cast<unsigned>(jobs);
  return n;
}

/// Run fn(i) for every i in [0, n). Indices are claimed from a shared
/// counter; after all workers finish, the exception thrown at the lowest
/// index (if any) is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  if (n == 0) return;
  const unsigned workers = worker_count(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace dualcharge
