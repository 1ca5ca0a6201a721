#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "hner/errors.hpp"
#include "hner/graph.hpp"
#include "hner/models.hpp"
#include "hner/ops.hpp"
#include "test_util.hpp"

using namespace hner;
using hner::test::random_tensor;

TEST(Tensor, RejectsZeroDimensionsAndSizeMismatch) {
  EXPECT_THROW(Tensor(Shape{0, 3}), DimensionError);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.at(1, 2), 1.5);
}

TEST(Ops, MatmulHandComputed) {
  Graph g;
  Var a = g.input(Tensor({2, 2}, {1, 2, 3, 4}));
  Var b = g.input(Tensor({2, 1}, {5, 6}));
  Var c = matmul(a, b);
  ASSERT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c.value()[0], 17.0);
  EXPECT_EQ(c.value()[1], 39.0);

  Var bt = g.input(Tensor({1, 2}, {5, 6}));
  Var d = matmul_nt(a, bt);
  EXPECT_EQ(d.value()[0], 17.0);
  EXPECT_EQ(d.value()[1], 39.0);
  EXPECT_THROW(matmul(a, bt), DimensionError);
}

TEST(Ops, BroadcastAddsTrailingSuffix) {
  Graph g;
  Var a = g.input(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  Var b = g.input(Tensor({3}, {10, 20, 30}));
  Var c = add(a, b);
  const std::vector<double> expect{11, 22, 33, 14, 25, 36};
  EXPECT_EQ(std::vector<double>(c.value().begin(), c.value().end()), expect);
  Var swapped = add(b, a);
  EXPECT_EQ(std::vector<double>(swapped.value().begin(), swapped.value().end()), expect);
  EXPECT_THROW(add(a, g.input(Tensor({2}, 1.0))), DimensionError);
}

TEST(Ops, ConcatSliceReshapeRoundTrip) {
  Rng rng(1);
  Graph g;
  Var a = g.input(random_tensor({2, 3}, rng));
  Var b = g.input(random_tensor({2, 4}, rng));
  Var c = concat(a, b, 1);
  ASSERT_EQ(c.shape(), (Shape{2, 7}));
  Var back = slice(c, 1, 3, 4);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(back.value()[i], b.value()[i]);
  Var r = reshape(c, {7, 2});
  EXPECT_EQ(r.shape(), (Shape{7, 2}));
  EXPECT_THROW(reshape(c, {5, 3}), DimensionError);
  EXPECT_THROW(slice(c, 1, 5, 3), DimensionError);
}

TEST(Ops, SoftmaxRowsSumToOne) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g;
    Var p = softmax(g.input(random_tensor({7, 13}, rng, -50.0, 50.0)), 1);
    for (std::size_t r = 0; r < 7; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 13; ++c) s += p.value()[r * 13 + c];
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Ops, ExtremeInputsStayFinite) {
  Graph g;
  const double big = 1e300;
  Var x = g.input(Tensor({1, 4}, {big, -big, 0.0, 1e5}));
  for (Var y : {softmax(x, 1), sigmoid(x), tanh(x)}) {
    for (double v : y.value()) EXPECT_TRUE(std::isfinite(v));
  }
  Var target = g.input(Tensor({1, 4}, {0, 1, 0, 0}));
  const std::vector<double> mask{1.0};
  Var loss = cross_entropy(softmax(x, 1), target, mask);
  EXPECT_TRUE(std::isfinite(loss.item()));
  EXPECT_NEAR(loss.item(), -std::log(kLogFloor), 1e-9);
}

TEST(Ops, UniformDistributionGivesLogClassCount) {
  Graph g;
  Var p = softmax(g.input(Tensor({3, 13}, 0.0)), 1);
  Var gold = g.input(one_hot(std::vector<std::size_t>{0, 5, 12}, 3, 13));
  const std::vector<double> mask{1, 1, 1};
  EXPECT_NEAR(cross_entropy(p, gold, mask).item(), std::log(13.0), 1e-12);
  EXPECT_NEAR(std::log(13.0), 2.5649, 1e-4);
}

TEST(Ops, CrossEntropyIgnoresMaskedRowsAndRejectsEmptyMask) {
  Graph g;
  Var p = g.input(Tensor({2, 2}, {0.25, 0.75, 0.5, 0.5}));
  Var gold = g.input(Tensor({2, 2}, {0, 1, 1, 0}));
  const std::vector<double> first{1, 0};
  EXPECT_NEAR(cross_entropy(p, gold, first).item(), -std::log(0.75), 1e-15);
  const std::vector<double> none{0, 0};
  EXPECT_THROW(cross_entropy(p, gold, none), DegenerateInputError);
  const std::vector<double> both{1, 1};
  EXPECT_NEAR(cross_entropy(p, gold, both, 4.0).item(), -(std::log(0.75) + std::log(0.5)) / 4.0, 1e-15);
}

TEST(Ops, MseDividesByTokensTimesWidth) {
  Graph g;
  Var x = g.input(Tensor({2, 2}, {1, 2, 3, 4}));
  Var y = g.input(Tensor({2, 2}, {0, 0, 0, 0}));
  const std::vector<double> mask{1, 0};
  EXPECT_DOUBLE_EQ(mse(x, y, mask).item(), (1.0 + 4.0) / 2.0);
}

TEST(Ops, DropoutIdentityOutsideTrainingAndValidatesRate) {
  Rng rng(3);
  Graph g;
  Var x = g.input(random_tensor({4, 5}, rng));
  Var eval = dropout(x, 0.5, false, rng);
  EXPECT_EQ(eval.id(), x.id());
  EXPECT_THROW(dropout(x, 1.0, true, rng), ParameterError);
  EXPECT_THROW(dropout(x, -0.1, true, rng), ParameterError);
  Var train = dropout(x, 0.5, true, rng);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = train.value()[i];
    EXPECT_TRUE(v == 0.0 || v == 2.0 * x.value()[i]);
  }
}

TEST(Graph, BackwardAccumulatesIntoTensorsAcrossCalls) {
  Tensor w({2}, {3.0, -1.0});
  w.set_requires_grad(true);
  for (int call = 1; call <= 2; ++call) {
    Graph g;
    Var loss = sum(mul(g.param(w), g.param(w)));
    g.backward(loss);
    EXPECT_EQ(w.grad()[0], 6.0 * call);
    EXPECT_EQ(w.grad()[1], -2.0 * call);
  }
  w.zero_grad();
  EXPECT_EQ(w.grad()[0], 0.0);
}

TEST(Graph, NonScalarLossRejectedAndConstParamsUntouched) {
  Tensor w({2}, {1.0, 2.0});
  Graph g;
  Var y = scale(g.param(static_cast<const Tensor&>(w)), 2.0);
  EXPECT_THROW(g.backward(y), DimensionError);
  g.backward(sum(y));
  EXPECT_FALSE(w.has_grad());
}

TEST(Ops, FuzzedFiniteInputsNeverProduceNanOrInf) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const double scale_in = std::pow(10.0, uniform(rng, -3.0, 3.0));
    Tensor a = random_tensor({3, 4}, rng, -scale_in, scale_in);
    a.set_requires_grad(true);
    Graph g;
    Var x = g.param(a);
    Var p = softmax(add(tanh(x), sigmoid(x)), 1);
    Var gold = g.input(one_hot(std::vector<std::size_t>{0, 1, 2}, 3, 4));
    const std::vector<double> mask{1, 1, 1};
    Var loss = add(cross_entropy(p, gold, mask), mse(x, g.input(Tensor({3, 4})), mask));
    g.backward(loss);
    ASSERT_TRUE(std::isfinite(loss.item()));
    for (double v : a.grad()) ASSERT_TRUE(std::isfinite(v));
  }
}
