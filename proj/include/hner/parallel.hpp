#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include "hner/kernels.hpp"

namespace hner {

// Runs body(i) for i in [0, n). Iterations are distributed over OpenMP
// threads in Parallel mode and run in order in Serial mode. Bodies must write
// only to per-index outputs. The first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  if (kernels::mode() == kernels::Mode::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace hner
