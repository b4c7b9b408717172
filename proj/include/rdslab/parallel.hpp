#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rdslab {

enum class Execution { Serial, Parallel };

/// Worker count for `requested` (<= 0 means all available threads).
inline int resolve_workers(int requested) {
#ifdef _OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

/// Reference loop: indices in ascending order on the calling thread.
template <class Fn>
void for_each_index_serial(std::size_t count, Fn&& fn) {
  for (std::size_t i = 0; i < count; ++i) fn(i);
}

/// OpenMP loop over independent work items. `fn` must write only to
/// storage owned by its index; results are then identical to the serial
/// loop for any worker count. The first exception thrown by any item is
/// rethrown after the loop.
template <class Fn>
void for_each_index(std::size_t count, int workers, Fn&& fn) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(workers))
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

template <class Fn>
void for_each_index(Execution mode, std::size_t count, int workers, Fn&& fn) {
  if (mode == Execution::Serial) {
    for_each_index_serial(count, fn);
  } else {
    for_each_index(count, workers, fn);
  }
}

}  // namespace rdslab
