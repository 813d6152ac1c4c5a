#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace cvbf {

namespace detail {
inline int& thread_override() {
  static int value = 0;
  return value;
}
inline thread_local bool in_parallel_region = false;
}  // namespace detail

// Worker count: set_thread_count() if called, else $CVBF_THREADS, else the
// hardware concurrency.
inline int thread_count() {
  if (detail::thread_override() > 0) return detail::thread_override();
  if (const char* env = std::getenv("CVBF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline void set_thread_count(int n) { detail::thread_override() = n; }

/// Runs body(i) for i in [0, n). Each index writes only its own output slot,
/// so results are independent of scheduling. Nested calls run inline. The
/// first exception (lowest index) is rethrown after all workers finish.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n));
  if (workers <= 1 || detail::in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto run = [&] {
    detail::in_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    detail::in_parallel_region = false;
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cvbf
