#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "hner/graph.hpp"
#include "hner/params.hpp"
#include "hner/rng.hpp"
#include "hner/tensor.hpp"

namespace hner {

enum class Direction { Forward, Backward };
enum class Activation { None, Tanh, Softmax };

const char* to_string(Direction d);
const char* to_string(Activation a);
Direction direction_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

double glorot_bound(std::size_t fan_in, std::size_t fan_out);
// [rows x cols] weights ~ U(-b, b) with b = sqrt(6 / (rows + cols)).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

// Packed LSTM weights. Gate blocks are stacked row-wise in the fixed order
// input, forget, cell, output; each block has `hidden_size` rows.
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Tensor weight_ih;  // [4H x D]
  Tensor weight_hh;  // [4H x H]
  Tensor bias;       // [4H]

  // Glorot-uniform weights, zero biases except forget gate = 1.
  static LstmParams init(std::size_t input_size, std::size_t hidden_size, Rng& rng);
  static LstmParams zeros(std::size_t input_size, std::size_t hidden_size);

  void register_into(ParamRegistry& registry, const std::string& prefix);
};

struct DenseParams {
  std::size_t input_size = 0;
  std::size_t output_size = 0;
  Activation activation = Activation::None;
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  static DenseParams init(std::size_t input_size, std::size_t output_size, Activation activation, Rng& rng);

  void register_into(ParamRegistry& registry, const std::string& prefix);
};

// Parameters bound as leaves of one graph.
struct BoundLstm {
  Var weight_ih;
  Var weight_hh;
  Var bias;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

struct BoundDense {
  Var weight;
  Var bias;
  Activation activation = Activation::None;
  std::size_t input_size = 0;
  std::size_t output_size = 0;
};

BoundLstm bind(Graph& g, LstmParams& p);
BoundLstm bind(Graph& g, const LstmParams& p);
BoundDense bind(Graph& g, DenseParams& p);
BoundDense bind(Graph& g, const DenseParams& p);

struct LstmState {
  Var h;  // [1 x H]
  Var c;  // [1 x H]
};

// i = sig(W_i x + U_i h + b_i), f = sig(...), g = tanh(...), o = sig(...)
// c' = f * c + i * g,  h' = o * tanh(c')
LstmState lstm_cell(const BoundLstm& p, Var x, Var h_prev, Var c_prev);

// Same recurrence with the input projection W x + b already computed: [1 x 4H].
LstmState lstm_step(const BoundLstm& p, Var projected_input, Var h_prev, Var c_prev);

// Runs the recurrence over the first `length` rows of xs [T x D] (all rows
// when length is nullopt). Output is [T x H] in original time order; rows at
// or past `length` are zero and never enter the recurrence, so trailing
// padding has no effect on real positions.
Var lstm_sequence(const BoundLstm& p, Var xs, Direction direction, std::optional<std::size_t> length = std::nullopt,
                  std::optional<LstmState> initial = std::nullopt);

// Per-timestep concat(forward, backward): [T x 2H].
Var bilstm(const BoundLstm& forward, const BoundLstm& backward, Var xs,
           std::optional<std::size_t> length = std::nullopt);

// activation(x W^T + b) over the last axis of x.
Var dense(const BoundDense& p, Var x);

}  // namespace hner
