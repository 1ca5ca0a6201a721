#include "hner/adam.hpp"

#include <cmath>
#include <string>

#include "hner/errors.hpp"

namespace hner {

AdamState AdamState::for_param(const Tensor& param, double beta1, double beta2, double epsilon) {
  AdamState s;
  s.m.assign(param.size(), 0.0);
  s.v.assign(param.size(), 0.0);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<AdamState> states, double lr) {
  if (params.size() != states.size()) {
    throw StateError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(states.size()) + " states");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = *params[p];
    AdamState& s = states[p];
    if (!param.has_grad()) throw StateError("adam_step: parameter " + std::to_string(p) + " has no gradient");
    if (s.m.size() != param.size() || s.v.size() != param.size()) {
      throw StateError("adam_step: state " + std::to_string(p) + " does not match parameter size");
    }
    s.t += 1;
    const double t = static_cast<double>(s.t);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);
    auto values = param.values();
    auto grad = param.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
      s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
      const double m_hat = s.m[i] / c1;
      const double v_hat = s.v[i] / c2;
      values[i] -= lr * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
  }
}

}  // namespace hner
