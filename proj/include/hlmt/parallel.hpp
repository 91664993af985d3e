#pragma once

// Deterministic data-parallel loop: items write only to their own slots and
// derive their own RNG streams, so the result is identical for any worker
// count. The global limit is a tuning knob only (set from the CLI --threads).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace hlmt::parallel {

inline std::atomic<int>& thread_limit_storage() {
  static std::atomic<int> limit{0};  // 0 = hardware concurrency
  return limit;
}

inline void set_thread_limit(int threads) { thread_limit_storage().store(threads); }

inline int effective_threads(std::int64_t items) {
  int limit = thread_limit_storage().load();
  if (limit <= 0) limit = static_cast<int>(std::thread::hardware_concurrency());
  if (limit <= 0) limit = 1;
  return static_cast<int>(std::min<std::int64_t>(limit, std::max<std::int64_t>(items, 1)));
}

inline bool& in_worker_flag() {
  thread_local bool flag = false;
  return flag;
}

// fn(i) for i in [0, count); exceptions are rethrown on the calling thread.
// Nested calls run serially on the worker that issued them.
template <typename Fn>
void parallel_for(std::int64_t count, Fn&& fn) {
  if (count <= 0) return;
  const int workers = effective_threads(count);
  if (workers <= 1 || in_worker_flag()) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      in_worker_flag() = true;
      try {
        for (;;) {
          const std::int64_t i = next.fetch_add(1);
          if (i >= count) break;
          fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hlmt::parallel
