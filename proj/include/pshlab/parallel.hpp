#ifndef PSHLAB_PARALLEL_HPP
#define PSHLAB_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pshlab {

namespace detail {
inline std::size_t& thread_count_storage() {
  static std::size_t count = 1;
  return count;
}
}  // namespace detail

inline void set_thread_count(std::size_t n) { detail::thread_count_storage() = std::max<std::size_t>(1, n); }
inline std::size_t thread_count() { return detail::thread_count_storage(); }

/// Runs body(i) for i in [0, n) over contiguous chunks. Bodies must only write
/// to index-owned state; any reduction happens afterwards in index order, so
/// results never depend on the thread count. The exception of the lowest
/// failing chunk is rethrown.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min(thread_count(), std::max<std::size_t>(n, 1));
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pshlab

#endif  // PSHLAB_PARALLEL_HPP
