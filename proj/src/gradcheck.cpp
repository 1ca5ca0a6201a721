#include "hner/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "hner/errors.hpp"
#include "hner/layers.hpp"
#include "hner/models.hpp"
#include "hner/ops.hpp"

namespace hner {

namespace {

constexpr std::size_t D = 6, H = 4, C = 5, T = 5, kLength = 4;

struct Suite {
  explicit Suite(std::uint64_t s) : seed(s), rng(mix_seed(s, 7)) {}

  Tensor& random(Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = uniform(rng, lo, hi);
    store.push_back(std::move(t));
    return store.back();
  }

  // sum(y * w) with a fixed random w, so every output entry matters.
  Var project(Graph& g, Var y, const Tensor& w) { return sum(mul(y, g.param(w))); }

  void run(const std::string& name, std::vector<Tensor*> tensors, const LossBuilder& build, double tol) {
    auto r = check_gradients(name, tensors, build, tol, rng);
    r.seed = seed;
    results.push_back(std::move(r));
  }

  std::uint64_t seed;
  Rng rng;
  std::deque<Tensor> store;
  std::vector<GradCheckResult> results;
};

std::vector<double> test_mask() {
  std::vector<double> mask(T, 0.0);
  std::fill(mask.begin(), mask.begin() + kLength, 1.0);
  return mask;
}

Tensor gold_rows(Rng& rng) {
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < kLength; ++t) idx.push_back(uniform_index(rng, C));
  return one_hot(idx, T, C);
}

void op_cases(Suite& s) {
  const double lin = kGradCheckLinearTolerance, nl = kGradCheckTolerance;
  {
    Tensor &a = s.random({3, 4}), &b = s.random({3, 4}), &w = s.random({3, 4});
    s.run("op.add", {&a, &b}, [&](Graph& g) { return s.project(g, add(g.param(a), g.param(b)), w); }, lin);
    s.run("op.mul", {&a, &b}, [&](Graph& g) { return s.project(g, mul(g.param(a), g.param(b)), w); }, lin);
    s.run("op.sigmoid", {&a}, [&](Graph& g) { return s.project(g, sigmoid(g.param(a)), w); }, nl);
    s.run("op.tanh", {&a}, [&](Graph& g) { return s.project(g, tanh(g.param(a)), w); }, nl);
    s.run("op.scale", {&a}, [&](Graph& g) { return s.project(g, scale(g.param(a), -1.7), w); }, lin);
    s.run("op.sum", {&a}, [&](Graph& g) { return sum(g.param(a)); }, lin);
    s.run("op.softmax.axis1", {&a}, [&](Graph& g) { return s.project(g, softmax(g.param(a), 1), w); }, nl);
    s.run("op.softmax.axis0", {&a}, [&](Graph& g) { return s.project(g, softmax(g.param(a), 0), w); }, nl);
    Tensor& w43 = s.random({4, 3});
    s.run("op.reshape", {&a}, [&](Graph& g) { return s.project(g, reshape(g.param(a), {4, 3}), w43); }, lin);
  }
  {
    Tensor &a = s.random({3, 4}), &bias = s.random({4}), &w = s.random({3, 4});
    s.run("op.add.broadcast", {&a, &bias}, [&](Graph& g) { return s.project(g, add(g.param(a), g.param(bias)), w); },
          lin);
    s.run("op.mul.broadcast", {&a, &bias}, [&](Graph& g) { return s.project(g, mul(g.param(a), g.param(bias)), w); },
          lin);
  }
  {
    Tensor &a = s.random({3, 4}), &b = s.random({4, 2}), &bt = s.random({2, 4}), &w = s.random({3, 2});
    s.run("op.matmul", {&a, &b}, [&](Graph& g) { return s.project(g, matmul(g.param(a), g.param(b)), w); }, lin);
    s.run("op.matmul_nt", {&a, &bt}, [&](Graph& g) { return s.project(g, matmul_nt(g.param(a), g.param(bt)), w); },
          lin);
  }
  {
    Tensor &a = s.random({2, 3}), &b = s.random({4, 3}), &c = s.random({2, 5});
    Tensor &w0 = s.random({6, 3}), &w1 = s.random({2, 8}), &w2 = s.random({2, 3});
    s.run("op.concat.axis0", {&a, &b}, [&](Graph& g) { return s.project(g, concat(g.param(a), g.param(b), 0), w0); },
          lin);
    s.run("op.concat.axis1", {&a, &c}, [&](Graph& g) { return s.project(g, concat(g.param(a), g.param(c), 1), w1); },
          lin);
    s.run("op.concat.list", {&a, &b}, [&](Graph& g) {
      Var parts[] = {g.param(b), g.param(a), g.param(b)};
      return sum(mul(concat(parts, 0), concat(parts, 0)));
    }, nl);
    s.run("op.slice.axis0", {&b}, [&](Graph& g) { return s.project(g, slice(g.param(b), 0, 1, 2), w2); }, lin);
    s.run("op.slice.axis1", {&c}, [&](Graph& g) { return s.project(g, slice(g.param(c), 1, 2, 3), w2); }, lin);
  }
  {
    Tensor& probs = s.random({T, C}, 0.05, 1.0);
    Tensor& target = s.random({T, C}, 0.0, 1.0);
    Tensor &x = s.random({T, D}), &y = s.random({T, D});
    const std::vector<double> mask = test_mask();
    s.run("op.cross_entropy", {&probs}, [&](Graph& g) {
      return cross_entropy(g.param(probs), g.param(target), mask);
    }, nl);
    s.run("op.cross_entropy.normalizer", {&probs}, [&](Graph& g) {
      return cross_entropy(g.param(probs), g.param(target), mask, 7.0);
    }, nl);
    s.run("op.mse", {&x, &y}, [&](Graph& g) { return mse(g.param(x), g.param(y), mask); }, nl);
    Tensor& w = s.random({T, D});
    const std::uint64_t drop_seed = s.rng();
    s.run("op.dropout", {&x}, [&](Graph& g) {
      Rng r(drop_seed);
      return s.project(g, dropout(g.param(x), 0.4, true, r), w);
    }, lin);
  }
}

void layer_cases(Suite& s) {
  const double nl = kGradCheckTolerance;
  {
    LstmParams p = LstmParams::init(D, H, s.rng);
    Tensor &x = s.random({1, D}), &h = s.random({1, H}), &c = s.random({1, H});
    Tensor &proj = s.random({1, 4 * H}), &wh = s.random({1, H}), &wc = s.random({1, H});
    std::vector<Tensor*> cell = {&p.weight_ih, &p.weight_hh, &p.bias, &x, &h, &c};
    s.run("layer.lstm_cell", cell, [&](Graph& g) {
      auto st = lstm_cell(bind(g, p), g.param(x), g.param(h), g.param(c));
      return add(s.project(g, st.h, wh), s.project(g, st.c, wc));
    }, nl);
    s.run("layer.lstm_step", {&p.weight_hh, &p.bias, &proj, &h, &c}, [&](Graph& g) {
      auto st = lstm_step(bind(g, p), g.param(proj), g.param(h), g.param(c));
      return add(s.project(g, st.h, wh), s.project(g, st.c, wc));
    }, nl);

    Tensor &xs = s.random({T, D}), &w = s.random({T, H});
    std::vector<Tensor*> seq = {&p.weight_ih, &p.weight_hh, &p.bias, &xs, &h, &c};
    for (Direction dir : {Direction::Forward, Direction::Backward}) {
      s.run(std::string("layer.lstm_sequence.") + to_string(dir), seq, [&, dir](Graph& g) {
        LstmState init{g.param(h), g.param(c)};
        return s.project(g, lstm_sequence(bind(g, p), g.param(xs), dir, kLength, init), w);
      }, nl);
    }

    LstmParams q = LstmParams::init(D, H, s.rng);
    Tensor& w2 = s.random({T, 2 * H});
    std::vector<Tensor*> bi = {&p.weight_ih, &p.weight_hh, &p.bias, &q.weight_ih, &q.weight_hh, &q.bias, &xs};
    s.run("layer.bilstm", bi, [&](Graph& g) {
      return s.project(g, bilstm(bind(g, p), bind(g, q), g.param(xs), kLength), w2);
    }, nl);
  }
  {
    Tensor &x = s.random({T, D}), &w = s.random({T, C});
    for (Activation act : {Activation::None, Activation::Tanh, Activation::Softmax}) {
      DenseParams p = DenseParams::init(D, C, act, s.rng);
      s.run(std::string("layer.dense.") + to_string(act), {&p.weight, &p.bias, &x}, [&](Graph& g) {
        return s.project(g, dense(bind(g, p), g.param(x)), w);
      }, act == Activation::None ? kGradCheckLinearTolerance : nl);
    }
  }
}

std::vector<Tensor*> with(ParamRegistry reg, std::initializer_list<Tensor*> extra) {
  std::vector<Tensor*> out = reg.tensors();
  out.insert(out.end(), extra);
  return out;
}

void model_cases(Suite& s) {
  const double nl = kGradCheckTolerance;
  const std::vector<double> mask = test_mask();
  Tensor& emb = s.random({T, D});
  for (std::size_t t = kLength; t < T; ++t) {
    for (std::size_t d = 0; d < D; ++d) emb.at(t, d) = 0.0;
  }
  const Tensor gold = gold_rows(s.rng);
  Tensor& noisy = s.random({T, C}, 0.0, 1.0);
  const std::uint64_t drop_seed = s.rng();

  {
    BaseTaggerConfig cfg;
    cfg.embedding_dim = D;
    cfg.hidden_size = H;
    cfg.layers = 2;
    cfg.num_tags = C;
    cfg.dropout = 0.5;
    BaseTagger m(cfg, s.rng);
    s.run("model.base", with(m.params(), {&emb}), [&](Graph& g) {
      Rng r(drop_seed);
      return base_loss(m.forward(g, g.param(emb), kLength, true, &r), g.input(gold), mask);
    }, nl);
  }
  for (Direction dir : {Direction::Forward, Direction::Backward}) {
    DaeConfig cfg;
    cfg.embedding_dim = D;
    cfg.num_tags = C;
    cfg.hidden_size = H;
    cfg.bottleneck = 3;
    cfg.decoder_direction = dir;
    cfg.lambda = 0.7;
    DaeRefiner m(cfg, s.rng);
    s.run(std::string("model.dae.decoder-") + to_string(dir), with(m.params(), {&emb, &noisy}), [&](Graph& g) {
      Var e = g.param(emb);
      auto out = m.forward(g, e, g.param(noisy), kLength);
      return dae_loss(out, e, g.input(gold), mask, cfg.lambda);
    }, nl);
  }
  for (CondVariant v : {CondVariant::Bilstm, CondVariant::Dense}) {
    CondConfig cfg;
    cfg.variant = v;
    cfg.embedding_dim = D;
    cfg.num_tags = C;
    cfg.hidden_size = H;
    cfg.layers = 2;
    cfg.dense_widths = {8, C};
    cfg.dropout = 0.5;
    CondRefiner m(cfg, s.rng);
    s.run(std::string("model.") + to_string(m.family()), with(m.params(), {&emb, &noisy}), [&](Graph& g) {
      Rng r(drop_seed);
      Var probs = m.forward(g, g.param(emb), g.param(noisy), kLength, true, &r);
      return base_loss(probs, g.input(gold), mask);
    }, nl);
  }
}

}  // namespace

GradCheckResult check_gradients(const std::string& name, std::span<Tensor* const> tensors, const LossBuilder& build,
                                double tolerance, Rng& rng, std::size_t max_coords, double epsilon) {
  for (Tensor* t : tensors) {
    t->set_requires_grad(true);
    t->zero_grad();
  }
  {
    Graph g;
    Var loss = build(g);
    g.backward(loss);
  }
  GradCheckResult result;
  result.name = name;
  result.tolerance = tolerance;
  for (Tensor* t : tensors) {
    std::vector<std::size_t> coords(t->size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > max_coords) {
      shuffle(std::span<std::size_t>(coords), rng);
      coords.resize(max_coords);
    }
    const std::vector<double> analytic(t->grad().begin(), t->grad().end());
    for (std::size_t i : coords) {
      const double saved = (*t)[i];
      (*t)[i] = saved + epsilon;
      double plus, minus;
      {
        Graph g;
        plus = build(g).item();
      }
      (*t)[i] = saved - epsilon;
      {
        Graph g;
        minus = build(g).item();
      }
      (*t)[i] = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      double err = std::abs(a - numeric) / denom;
      if (!std::isfinite(err)) err = INFINITY;
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.coordinates;
    }
  }
  for (Tensor* t : tensors) t->set_requires_grad(false);
  return result;
}

std::vector<GradCheckResult> gradcheck_suite(std::uint64_t seed) {
  Suite s(seed);
  op_cases(s);
  layer_cases(s);
  model_cases(s);
  return std::move(s.results);
}

}  // namespace hner
