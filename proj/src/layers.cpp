#include "hner/layers.hpp"

#include <cmath>
#include <vector>

#include "hner/errors.hpp"
#include "hner/ops.hpp"

namespace hner {

const char* to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

const char* to_string(Activation a) {
  switch (a) {
    case Activation::None:
      return "none";
    case Activation::Tanh:
      return "tanh";
    case Activation::Softmax:
      return "softmax";
  }
  return "none";
}

Direction direction_from_string(const std::string& s) {
  if (s == "forward") return Direction::Forward;
  if (s == "backward") return Direction::Backward;
  throw ParameterError("unknown direction: " + s);
}

Activation activation_from_string(const std::string& s) {
  if (s == "none") return Activation::None;
  if (s == "tanh") return Activation::Tanh;
  if (s == "softmax") return Activation::Softmax;
  throw ParameterError("unknown activation: " + s);
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) {
    throw ParameterError("glorot_uniform: dimensions must be positive, got " + std::to_string(rows) + " x " +
                         std::to_string(cols));
  }
  const double bound = glorot_bound(cols, rows);
  Tensor t(Shape{rows, cols});
  for (double& v : t.values()) v = uniform(rng, -bound, bound);
  return t;
}

LstmParams LstmParams::init(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  if (input_size == 0 || hidden_size == 0) throw ParameterError("LSTM sizes must be positive");
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.weight_ih = glorot_uniform(4 * hidden_size, input_size, rng);
  p.weight_hh = glorot_uniform(4 * hidden_size, hidden_size, rng);
  p.bias = Tensor(Shape{4 * hidden_size}, 0.0);
  for (std::size_t i = hidden_size; i < 2 * hidden_size; ++i) p.bias[i] = 1.0;
  return p;
}

LstmParams LstmParams::zeros(std::size_t input_size, std::size_t hidden_size) {
  if (input_size == 0 || hidden_size == 0) throw ParameterError("LSTM sizes must be positive");
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.weight_ih = Tensor(Shape{4 * hidden_size, input_size});
  p.weight_hh = Tensor(Shape{4 * hidden_size, hidden_size});
  p.bias = Tensor(Shape{4 * hidden_size});
  return p;
}

void LstmParams::register_into(ParamRegistry& registry, const std::string& prefix) {
  registry.add(prefix + ".weight_ih", weight_ih);
  registry.add(prefix + ".weight_hh", weight_hh);
  registry.add(prefix + ".bias", bias);
}

DenseParams DenseParams::init(std::size_t input_size, std::size_t output_size, Activation activation, Rng& rng) {
  if (input_size == 0 || output_size == 0) throw ParameterError("dense sizes must be positive");
  DenseParams p;
  p.input_size = input_size;
  p.output_size = output_size;
  p.activation = activation;
  p.weight = glorot_uniform(output_size, input_size, rng);
  p.bias = Tensor(Shape{output_size}, 0.0);
  return p;
}

void DenseParams::register_into(ParamRegistry& registry, const std::string& prefix) {
  registry.add(prefix + ".weight", weight);
  registry.add(prefix + ".bias", bias);
}

namespace {

template <typename P>
BoundLstm bind_lstm(Graph& g, P& p) {
  return BoundLstm{g.param(p.weight_ih), g.param(p.weight_hh), g.param(p.bias), p.input_size, p.hidden_size};
}

template <typename P>
BoundDense bind_dense(Graph& g, P& p) {
  return BoundDense{g.param(p.weight), g.param(p.bias), p.activation, p.input_size, p.output_size};
}

void require_row(Var v, std::size_t width, const char* what) {
  const Shape& s = v.shape();
  if (s.size() != 2 || s[0] != 1 || s[1] != width) {
    throw DimensionError(std::string("lstm: ") + what + " must be [1 x " + std::to_string(width) + "], got " +
                         shape_string(s));
  }
}

}  // namespace

BoundLstm bind(Graph& g, LstmParams& p) { return bind_lstm(g, p); }
BoundLstm bind(Graph& g, const LstmParams& p) { return bind_lstm(g, p); }
BoundDense bind(Graph& g, DenseParams& p) { return bind_dense(g, p); }
BoundDense bind(Graph& g, const DenseParams& p) { return bind_dense(g, p); }

LstmState lstm_step(const BoundLstm& p, Var projected_input, Var h_prev, Var c_prev) {
  const std::size_t H = p.hidden_size;
  require_row(projected_input, 4 * H, "projected input");
  require_row(h_prev, H, "h_prev");
  require_row(c_prev, H, "c_prev");
  Var gates = add(projected_input, matmul_nt(h_prev, p.weight_hh));
  Var i = sigmoid(slice(gates, 1, 0, H));
  Var f = sigmoid(slice(gates, 1, H, H));
  Var g = tanh(slice(gates, 1, 2 * H, H));
  Var o = sigmoid(slice(gates, 1, 3 * H, H));
  Var c = add(mul(f, c_prev), mul(i, g));
  Var h = mul(o, tanh(c));
  return LstmState{h, c};
}

LstmState lstm_cell(const BoundLstm& p, Var x, Var h_prev, Var c_prev) {
  require_row(x, p.input_size, "x");
  return lstm_step(p, add(matmul_nt(x, p.weight_ih), p.bias), h_prev, c_prev);
}

Var lstm_sequence(const BoundLstm& p, Var xs, Direction direction, std::optional<std::size_t> length,
                  std::optional<LstmState> initial) {
  const Shape& s = xs.shape();
  if (s.size() != 2 || s[1] != p.input_size) {
    throw DimensionError("lstm_sequence: input " + shape_string(s) + " does not match input size " +
                         std::to_string(p.input_size));
  }
  const std::size_t T = s[0];
  const std::size_t n = length.value_or(T);
  if (n == 0) throw DegenerateInputError("lstm_sequence: empty sequence");
  if (n > T) {
    throw DimensionError("lstm_sequence: length " + std::to_string(n) + " exceeds " + std::to_string(T) + " rows");
  }
  Graph& g = xs.graph();
  const std::size_t H = p.hidden_size;

  Var real = n == T ? xs : slice(xs, 0, 0, n);
  Var projected = add(matmul_nt(real, p.weight_ih), p.bias);

  LstmState state = initial ? *initial : LstmState{g.input(Tensor(Shape{1, H})), g.input(Tensor(Shape{1, H}))};
  std::vector<Var> rows(n);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = direction == Direction::Forward ? step : n - 1 - step;
    state = lstm_step(p, slice(projected, 0, t, 1), state.h, state.c);
    rows[t] = state.h;
  }
  if (n < T) rows.push_back(g.input(Tensor(Shape{T - n, H})));
  return concat(rows, 0);
}

Var bilstm(const BoundLstm& forward, const BoundLstm& backward, Var xs, std::optional<std::size_t> length) {
  if (forward.hidden_size != backward.hidden_size || forward.input_size != backward.input_size) {
    throw DimensionError("bilstm: forward (" + std::to_string(forward.input_size) + " -> " +
                         std::to_string(forward.hidden_size) + ") and backward (" +
                         std::to_string(backward.input_size) + " -> " + std::to_string(backward.hidden_size) +
                         ") parameter sets disagree");
  }
  Var f = lstm_sequence(forward, xs, Direction::Forward, length);
  Var b = lstm_sequence(backward, xs, Direction::Backward, length);
  return concat(f, b, 1);
}

Var dense(const BoundDense& p, Var x) {
  const Shape s = x.shape();
  if (s.empty() || s.back() != p.input_size) {
    throw DimensionError("dense: input " + shape_string(s) + " does not end in " + std::to_string(p.input_size));
  }
  const std::size_t rows = x.size() / p.input_size;
  Var flat = s.size() == 2 ? x : reshape(x, Shape{rows, p.input_size});
  Var y = add(matmul_nt(flat, p.weight), p.bias);
  switch (p.activation) {
    case Activation::None:
      break;
    case Activation::Tanh:
      y = tanh(y);
      break;
    case Activation::Softmax:
      y = softmax(y, 1);
      break;
  }
  if (s.size() == 2) return y;
  Shape out = s;
  out.back() = p.output_size;
  return reshape(y, out);
}

}  // namespace hner
