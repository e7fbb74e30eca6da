#pragma once

// Thin OpenMP shim. Every kernel that uses it has a serial reference and the
// results do not depend on the thread count (work items are independent and
// written to disjoint slots).

#include <cstddef>
#include <cstdint>
#include <exception>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace zrlab {

/// Serial reference or OpenMP path of a kernel; both give identical results.
enum class Execution { Serial, Parallel };

inline int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace detail {

// Exceptions must not leave an OpenMP region; keep the first one and rethrow
// it on the calling thread once the loop is done.
class FirstError {
 public:
  template <class F>
  void run(F& body, std::size_t i) noexcept {
    try {
      body(i);
    } catch (...) {
#if defined(_OPENMP)
#pragma omp critical(zrlab_first_error)
#endif
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace detail

template <class F>
void parallel_for(std::size_t n, F&& body) {
  const auto count = static_cast<std::int64_t>(n);
  detail::FirstError errors;
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::int64_t i = 0; i < count; ++i) errors.run(body, static_cast<std::size_t>(i));
  errors.rethrow();
}

// Static schedule for fine-grained loops over grid cells.
template <class F>
void for_each_index(Execution mode, std::size_t n, F&& body) {
  const auto count = static_cast<std::int64_t>(n);
  if (mode == Execution::Serial) {
    for (std::int64_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    return;
  }
  detail::FirstError errors;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < count; ++i) errors.run(body, static_cast<std::size_t>(i));
  errors.rethrow();
}

}  // namespace zrlab
