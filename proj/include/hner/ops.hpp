#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "hner/graph.hpp"
#include "hner/rng.hpp"

namespace hner {

// exp() arguments are clamped to this range; log() arguments floored.
inline constexpr double kExpClamp = 700.0;
inline constexpr double kLogFloor = 1e-12;

enum class Elementwise { Add, Mul, Sigmoid, Tanh };

// Binary kinds accept equal shapes or a right operand whose shape is a
// trailing suffix of the left one (bias-add style leading-axis expansion).
Var elementwise(Elementwise kind, Var a);
Var elementwise(Elementwise kind, Var a, Var b);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var sigmoid(Var x);
Var tanh(Var x);
Var scale(Var x, double factor);
Var sum(Var x);

// [m x k] * [k x n]
Var matmul(Var a, Var b);
// [m x k] * [n x k]^T, the layout of a weight matrix stored [out x in].
Var matmul_nt(Var a, Var b);

Var concat(Var a, Var b, std::size_t axis);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t length);
Var reshape(Var x, Shape shape);

Var softmax(Var x, std::size_t axis);

// Masked categorical cross-entropy over rows of a [T x C] distribution.
// Returns -(1/normalizer) * sum_t mask_t * sum_c target[t,c] * ln(max(p[t,c], 1e-12)).
// normalizer defaults to sum(mask). No gradient flows into target.
Var cross_entropy(Var probs, Var target, std::span<const double> mask,
                  std::optional<double> normalizer = std::nullopt);

// Masked mean squared error over rows of [T x D]; divides by normalizer * D
// with normalizer defaulting to sum(mask).
Var mse(Var x, Var target, std::span<const double> mask, std::optional<double> normalizer = std::nullopt);

// Inverted dropout; identity when !training or p == 0.
Var dropout(Var x, double p, bool training, Rng& rng);

}  // namespace hner
