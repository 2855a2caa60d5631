#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rslf {

namespace detail {
inline std::atomic<int>& worker_override() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

/// Force a worker count (1 = deterministic single-worker reductions);
/// 0 restores the default.
inline void set_worker_count(int n) { detail::worker_override() = std::max(0, n); }

/// Worker count: explicit override, else RSLF_THREADS, else hardware.
inline int worker_count() {
  if (int o = detail::worker_override(); o > 0) return o;
  if (const char* env = std::getenv("RSLF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(worker, begin, end) over contiguous, statically partitioned chunks
/// of [0, n). Chunk boundaries depend only on n and the worker count, so
/// per-worker partial results reduced in worker order are reproducible.
template <typename Fn>
void parallel_chunks(int n, Fn&& fn, int workers = worker_count()) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int w = 0; w < workers; ++w) {
    const int b = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int e = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, w, b, e] {
      try {
        fn(w, b, e);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace rslf
