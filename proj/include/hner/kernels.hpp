#pragma once

#include <cstddef>
#include <span>

// Dense matrix kernels used by the autodiff ops. Each kernel exists in a
// serial reference form and an OpenMP form. The OpenMP form partitions output
// rows across threads and keeps the per-element accumulation order of the
// serial form, so both produce bitwise-identical results.
namespace hner::kernels {

enum class Mode { Serial, Parallel };

// Process-wide dispatch mode. Defaults to Parallel.
void set_mode(Mode mode);
Mode mode();

// RAII switch for tests that need serial numerics.
class ScopedMode {
 public:
  explicit ScopedMode(Mode m) : previous_(mode()) { set_mode(m); }
  ~ScopedMode() { set_mode(previous_); }
  ScopedMode(const ScopedMode&) = delete;
  ScopedMode& operator=(const ScopedMode&) = delete;

 private:
  Mode previous_;
};

int max_threads();

// Work below this many multiply-adds always runs serially.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

namespace serial {
// c[m x n] = a[m x k] * b[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
// c[m x n] = a[m x k] * b[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
// c[m x n] += a[k x m]^T * b[k x n]
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
// c[m x n] += a[m x k] * b[k x n]
void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
}  // namespace serial

namespace parallel {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
}  // namespace parallel

// Dispatching entry points: honour mode() and kParallelThreshold.
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);

}  // namespace hner::kernels
