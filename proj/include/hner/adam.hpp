#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hner/tensor.hpp"

namespace hner {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_param(const Tensor& param, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
};

// One bias-corrected Adam update per parameter:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// with t taken after incrementing. Throws StateError when a parameter has no
// gradient or the state does not match it.
void adam_step(std::span<Tensor* const> params, std::span<AdamState> states, double lr);

}  // namespace hner
