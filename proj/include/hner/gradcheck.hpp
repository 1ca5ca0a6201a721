#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hner/graph.hpp"
#include "hner/rng.hpp"

namespace hner {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t coordinates = 0;
  std::uint64_t seed = 0;

  bool passed() const { return max_rel_error < tolerance; }
};

inline constexpr double kGradCheckEpsilon = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckLinearTolerance = 1e-6;
// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradCheckFloor = 1e-3;

// Builds a scalar loss on a fresh graph from the tensors under test. Must be
// a deterministic function of their values.
using LossBuilder = std::function<Var(Graph&)>;

// Compares backward() gradients with central differences on up to
// max_coords randomly chosen coordinates of each tensor.
GradCheckResult check_gradients(const std::string& name, std::span<Tensor* const> tensors, const LossBuilder& build,
                                double tolerance, Rng& rng, std::size_t max_coords = 16,
                                double epsilon = kGradCheckEpsilon);

// Every differentiable op, layer and model family at D=6, H=4, C=5, T=5.
std::vector<GradCheckResult> gradcheck_suite(std::uint64_t seed);

}  // namespace hner
