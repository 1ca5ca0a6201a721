#include "hner/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "hner/errors.hpp"

namespace hner {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << " x ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimension must be positive: " + shape_string(shape_));
  }
  values_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("tensor dimension must be positive: " + shape_string(shape_));
  }
  if (shape_size(shape_) != values_.size()) {
    throw DimensionError("tensor of shape " + shape_string(shape_) + " given " + std::to_string(values_.size()) +
                         " values");
  }
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (on && grad_.empty()) grad_.assign(values_.size(), 0.0);
  if (!on) grad_.clear();
}

void Tensor::zero_grad() {
  if (requires_grad_) grad_.assign(values_.size(), 0.0);
}

void Tensor::accumulate_grad(std::span<const double> g) {
  if (g.size() != values_.size()) {
    throw DimensionError("gradient length " + std::to_string(g.size()) + " does not match tensor " +
                         shape_string(shape_));
  }
  if (grad_.empty()) grad_.assign(values_.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) grad_[i] += g[i];
}

}  // namespace hner
