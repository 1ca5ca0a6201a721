#include <gtest/gtest.h>

#include <cmath>

#include "hner/errors.hpp"
#include "hner/gradcheck.hpp"
#include "hner/layers.hpp"
#include "hner/ops.hpp"
#include "test_util.hpp"

using namespace hner;
using hner::test::random_tensor;

TEST(Layers, GlorotBoundAndInitRanges) {
  EXPECT_DOUBLE_EQ(glorot_bound(3, 5), std::sqrt(6.0 / 8.0));
  Rng rng(1);
  LstmParams p = LstmParams::init(6, 4, rng);
  EXPECT_EQ(p.weight_ih.shape(), (Shape{16, 6}));
  EXPECT_EQ(p.weight_hh.shape(), (Shape{16, 4}));
  const double b = glorot_bound(6, 16);
  for (double v : p.weight_ih.values()) EXPECT_LE(std::abs(v), b);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(p.bias[i], (i >= 4 && i < 8) ? 1.0 : 0.0);
}

TEST(Layers, LstmCellWithZeroWeights) {
  // All gates at sigmoid(0) = 0.5 and candidate tanh(0) = 0:
  // c' = 0.5 c, h' = 0.5 tanh(0.5 c).
  LstmParams p = LstmParams::zeros(3, 2);
  Graph g;
  auto bound = bind(g, p);
  Var x = g.input(Tensor({1, 3}, {1, 2, 3}));
  Var h = g.input(Tensor({1, 2}, {0.7, -0.7}));
  Var c = g.input(Tensor({1, 2}, {2.0, -4.0}));
  auto st = lstm_cell(bound, x, h, c);
  EXPECT_DOUBLE_EQ(st.c.value()[0], 1.0);
  EXPECT_DOUBLE_EQ(st.c.value()[1], -2.0);
  EXPECT_DOUBLE_EQ(st.h.value()[0], 0.5 * std::tanh(1.0));
  EXPECT_DOUBLE_EQ(st.h.value()[1], 0.5 * std::tanh(-2.0));
}

TEST(Layers, SequencePaddingIsExactlyNeutral) {
  Rng rng(2);
  LstmParams p = LstmParams::init(5, 4, rng);
  Tensor real = random_tensor({23, 5}, rng);
  Tensor padded({30, 5});
  std::copy(real.values().begin(), real.values().end(), padded.values().begin());
  for (Direction dir : {Direction::Forward, Direction::Backward}) {
    Graph g;
    auto bound = bind(g, p);
    Var a = lstm_sequence(bound, g.input(real), dir);
    Var b = lstm_sequence(bound, g.input(padded), dir, 23);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a.value()[i], b.value()[i]);
    for (std::size_t i = a.size(); i < b.size(); ++i) ASSERT_EQ(b.value()[i], 0.0);
  }
}

TEST(Layers, BackwardDirectionReversesTime) {
  Rng rng(3);
  LstmParams p = LstmParams::init(3, 2, rng);
  Tensor xs = random_tensor({4, 3}, rng);
  Tensor rev({4, 3});
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t d = 0; d < 3; ++d) rev.at(t, d) = xs.at(3 - t, d);
  }
  Graph g;
  auto bound = bind(g, p);
  Var back = lstm_sequence(bound, g.input(xs), Direction::Backward);
  Var fwd = lstm_sequence(bound, g.input(rev), Direction::Forward);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t h = 0; h < 2; ++h) EXPECT_EQ(back.value()[t * 2 + h], fwd.value()[(3 - t) * 2 + h]);
  }
}

TEST(Layers, ShapeErrors) {
  Rng rng(4);
  LstmParams f = LstmParams::init(3, 2, rng), b = LstmParams::init(4, 2, rng);
  Graph g;
  Var xs = g.input(random_tensor({5, 3}, rng));
  EXPECT_THROW(bilstm(bind(g, f), bind(g, b), xs), DimensionError);
  EXPECT_THROW(lstm_sequence(bind(g, f), xs, Direction::Forward, 6), DimensionError);
  EXPECT_THROW(lstm_sequence(bind(g, f), xs, Direction::Forward, 0), DegenerateInputError);
  DenseParams d = DenseParams::init(4, 2, Activation::Tanh, rng);
  EXPECT_THROW(dense(bind(g, d), xs), DimensionError);
}

TEST(Layers, DenseAppliesOverLastAxis) {
  DenseParams d;
  d.input_size = 2;
  d.output_size = 1;
  d.activation = Activation::None;
  d.weight = Tensor({1, 2}, {2.0, -1.0});
  d.bias = Tensor({1}, {0.5});
  Graph g;
  Var y = dense(bind(g, d), g.input(Tensor({3, 2}, {1, 1, 2, 0, 0, 4})));
  EXPECT_EQ(std::vector<double>(y.value().begin(), y.value().end()), (std::vector<double>{1.5, 4.5, -3.5}));
}

TEST(GradCheck, SuiteSmoke) {
  for (std::uint64_t seed : {101u, 102u}) {
    for (const auto& r : gradcheck_suite(seed)) {
      EXPECT_TRUE(r.passed()) << r.name << " seed " << seed << " error " << r.max_rel_error;
      EXPECT_GT(r.coordinates, 0u) << r.name;
    }
  }
}

TEST(GradCheck, DetectsAWrongGradient) {
  // A fake op whose backward is off by a factor of two must fail.
  Rng rng(5);
  Tensor x = random_tensor({3}, rng);
  Tensor* ts[] = {&x};
  auto broken = [&](Graph& g) {
    Var in = g.param(x);
    std::vector<double> v(in.value().begin(), in.value().end());
    for (double& e : v) e = e * e;
    Var sq = g.record("bad_square", {3}, v, {in.id()}, [](Graph& gr, std::size_t id) {
      const auto& node = gr.node(id);
      const std::size_t src = node.inputs[0];
      auto gin = gr.grad_buffer(src);
      const auto& xv = gr.node(src).value;
      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += 4.0 * xv[i] * node.grad[i];
    });
    return sum(sq);
  };
  auto r = check_gradients("bad_square", ts, broken, kGradCheckTolerance, rng);
  EXPECT_FALSE(r.passed());
}
