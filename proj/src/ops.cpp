#include "hner/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hner/errors.hpp"
#include "hner/kernels.hpp"

namespace hner {

namespace {

void require_same_graph(Var a, Var b, const char* op) {
  if (&a.graph() != &b.graph()) throw StateError(std::string(op) + ": operands recorded on different graphs");
}

// True when `small` equals `big` or is a trailing suffix of it.
bool broadcastable(const Shape& big, const Shape& small) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

struct Extent {
  std::size_t outer = 1;
  std::size_t axis = 1;
  std::size_t inner = 1;
};

Extent extent_along(const Shape& shape, std::size_t axis) {
  Extent e;
  for (std::size_t i = 0; i < axis; ++i) e.outer *= shape[i];
  e.axis = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) e.inner *= shape[i];
  return e;
}

double clamp_exp_arg(double x) { return std::clamp(x, -kExpClamp, kExpClamp); }

Var binary(Elementwise kind, Var a, Var b) {
  require_same_graph(a, b, "elementwise");
  if (!broadcastable(a.shape(), b.shape())) {
    if (broadcastable(b.shape(), a.shape())) return binary(kind, b, a);
    throw DimensionError("elementwise: incompatible shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  auto av = a.value();
  auto bv = b.value();
  const std::size_t n = av.size();
  const std::size_t period = bv.size();
  std::vector<double> out(n);
  if (kind == Elementwise::Add) {
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bv[i % period];
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bv[i % period];
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.graph().record(kind == Elementwise::Add ? "add" : "mul", a.shape(), std::move(out), {ia, ib},
                          [kind, ia, ib, n, period](Graph& g, std::size_t self) {
                            const auto& gy = g.node(self).grad;
                            if (g.needs_grad(ia)) {
                              auto ga = g.grad_buffer(ia);
                              if (kind == Elementwise::Add) {
                                for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i];
                              } else {
                                const auto& bv = g.node(ib).value;
                                for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * bv[i % period];
                              }
                            }
                            if (g.needs_grad(ib)) {
                              auto gb = g.grad_buffer(ib);
                              if (kind == Elementwise::Add) {
                                for (std::size_t i = 0; i < n; ++i) gb[i % period] += gy[i];
                              } else {
                                const auto& av = g.node(ia).value;
                                for (std::size_t i = 0; i < n; ++i) gb[i % period] += gy[i] * av[i];
                              }
                            }
                          });
}

Var unary(Elementwise kind, Var x) {
  auto xv = x.value();
  std::vector<double> out(xv.size());
  if (kind == Elementwise::Sigmoid) {
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-clamp_exp_arg(xv[i])));
  } else {
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::tanh(xv[i]);
  }
  const std::size_t ix = x.id();
  return x.graph().record(kind == Elementwise::Sigmoid ? "sigmoid" : "tanh", x.shape(), std::move(out), {ix},
                          [kind, ix](Graph& g, std::size_t self) {
                            const auto& node = g.node(self);
                            const auto& y = node.value;
                            const auto& gy = node.grad;
                            auto gx = g.grad_buffer(ix);
                            if (kind == Elementwise::Sigmoid) {
                              for (std::size_t i = 0; i < y.size(); ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
                            } else {
                              for (std::size_t i = 0; i < y.size(); ++i) gx[i] += gy[i] * (1.0 - y[i] * y[i]);
                            }
                          });
}

void check_mask(std::span<const double> mask, std::size_t rows, const char* op) {
  if (mask.size() != rows) {
    throw DimensionError(std::string(op) + ": mask length " + std::to_string(mask.size()) + " does not match " +
                         std::to_string(rows) + " rows");
  }
}

double resolve_normalizer(std::span<const double> mask, std::optional<double> normalizer, const char* op) {
  double n = normalizer ? *normalizer : std::accumulate(mask.begin(), mask.end(), 0.0);
  if (!(n > 0.0)) throw DegenerateInputError(std::string(op) + ": mask selects no tokens");
  return n;
}

}  // namespace

Var elementwise(Elementwise kind, Var a) {
  if (kind == Elementwise::Add || kind == Elementwise::Mul) {
    throw ParameterError("elementwise: add/mul need two operands");
  }
  return unary(kind, a);
}

Var elementwise(Elementwise kind, Var a, Var b) {
  if (kind == Elementwise::Sigmoid || kind == Elementwise::Tanh) {
    throw ParameterError("elementwise: sigmoid/tanh take one operand");
  }
  return binary(kind, a, b);
}

Var add(Var a, Var b) { return binary(Elementwise::Add, a, b); }
Var mul(Var a, Var b) { return binary(Elementwise::Mul, a, b); }
Var sigmoid(Var x) { return unary(Elementwise::Sigmoid, x); }
Var tanh(Var x) { return unary(Elementwise::Tanh, x); }

Var scale(Var x, double factor) {
  auto xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * factor;
  const std::size_t ix = x.id();
  return x.graph().record("scale", x.shape(), std::move(out), {ix}, [ix, factor](Graph& g, std::size_t self) {
    const auto& gy = g.node(self).grad;
    auto gx = g.grad_buffer(ix);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * factor;
  });
}

Var sum(Var x) {
  auto xv = x.value();
  double total = 0.0;
  for (double v : xv) total += v;
  const std::size_t ix = x.id();
  return x.graph().record("sum", Shape{}, {total}, {ix}, [ix](Graph& g, std::size_t self) {
    const double gy = g.node(self).grad[0];
    auto gx = g.grad_buffer(ix);
    for (double& v : gx) v += gy;
  });
}

Var matmul(Var a, Var b) {
  require_same_graph(a, b, "matmul");
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw DimensionError("matmul: cannot multiply " + shape_string(sa) + " by " + shape_string(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  std::vector<double> out(m * n);
  kernels::gemm_nn(m, n, k, a.value(), b.value(), out);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.graph().record("matmul", Shape{m, n}, std::move(out), {ia, ib},
                          [ia, ib, m, n, k](Graph& g, std::size_t self) {
                            const auto& gy = g.node(self).grad;
                            if (g.needs_grad(ia)) {
                              // dA = dC * B^T
                              std::vector<double> tmp(m * k);
                              kernels::gemm_nt(m, k, n, gy, g.node(ib).value, tmp);
                              auto ga = g.grad_buffer(ia);
                              for (std::size_t i = 0; i < tmp.size(); ++i) ga[i] += tmp[i];
                            }
                            if (g.needs_grad(ib)) {
                              // dB = A^T * dC
                              kernels::gemm_tn_acc(k, n, m, g.node(ia).value, gy, g.grad_buffer(ib));
                            }
                          });
}

Var matmul_nt(Var a, Var b) {
  require_same_graph(a, b, "matmul_nt");
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1]) {
    throw DimensionError("matmul_nt: cannot multiply " + shape_string(sa) + " by transpose of " + shape_string(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[0];
  std::vector<double> out(m * n);
  kernels::gemm_nt(m, n, k, a.value(), b.value(), out);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.graph().record("matmul_nt", Shape{m, n}, std::move(out), {ia, ib},
                          [ia, ib, m, n, k](Graph& g, std::size_t self) {
                            const auto& gy = g.node(self).grad;
                            if (g.needs_grad(ia)) {
                              // dA = dC * B
                              kernels::gemm_nn_acc(m, k, n, gy, g.node(ib).value, g.grad_buffer(ia));
                            }
                            if (g.needs_grad(ib)) {
                              // dB = dC^T * A
                              kernels::gemm_tn_acc(n, k, m, gy, g.node(ia).value, g.grad_buffer(ib));
                            }
                          });
}

Var concat(Var a, Var b, std::size_t axis) {
  const Var parts[] = {a, b};
  return concat(parts, axis);
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DegenerateInputError("concat: no operands");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " + shape_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    require_same_graph(parts[0], p, "concat");
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) {
      throw DimensionError("concat: shapes " + shape_string(first) + " and " + shape_string(s) +
                           " differ outside axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
  }
  const Extent e = extent_along(out_shape, axis);
  std::vector<std::size_t> chunk(parts.size());
  std::vector<std::size_t> ids(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    chunk[p] = parts[p].shape()[axis] * e.inner;
    ids[p] = parts[p].id();
  }
  std::vector<double> out(shape_size(out_shape));
  std::size_t pos = 0;
  for (std::size_t o = 0; o < e.outer; ++o) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      auto v = parts[p].value();
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(o * chunk[p]), chunk[p], out.begin() + pos);
      pos += chunk[p];
    }
  }
  Graph& graph = parts[0].graph();
  return graph.record("concat", out_shape, std::move(out), ids,
                      [ids, chunk, outer = e.outer](Graph& g, std::size_t self) {
                        const auto& gy = g.node(self).grad;
                        std::size_t pos = 0;
                        for (std::size_t o = 0; o < outer; ++o) {
                          for (std::size_t p = 0; p < ids.size(); ++p) {
                            if (g.needs_grad(ids[p])) {
                              auto gp = g.grad_buffer(ids[p]);
                              for (std::size_t i = 0; i < chunk[p]; ++i) gp[o * chunk[p] + i] += gy[pos + i];
                            }
                            pos += chunk[p];
                          }
                        }
                      });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t length) {
  const Shape& s = x.shape();
  if (axis >= s.size() || length == 0 || begin + length > s[axis]) {
    throw DimensionError("slice: [" + std::to_string(begin) + ", " + std::to_string(begin + length) +
                         ") along axis " + std::to_string(axis) + " of " + shape_string(s));
  }
  const Extent e = extent_along(s, axis);
  Shape out_shape = s;
  out_shape[axis] = length;
  const std::size_t src_stride = e.axis * e.inner;
  const std::size_t run = length * e.inner;
  const std::size_t offset = begin * e.inner;
  auto xv = x.value();
  std::vector<double> out(e.outer * run);
  for (std::size_t o = 0; o < e.outer; ++o) {
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(o * src_stride + offset), run,
                out.begin() + static_cast<std::ptrdiff_t>(o * run));
  }
  const std::size_t ix = x.id();
  return x.graph().record("slice", out_shape, std::move(out), {ix},
                          [ix, outer = e.outer, src_stride, run, offset](Graph& g, std::size_t self) {
                            const auto& gy = g.node(self).grad;
                            auto gx = g.grad_buffer(ix);
                            for (std::size_t o = 0; o < outer; ++o) {
                              for (std::size_t i = 0; i < run; ++i) gx[o * src_stride + offset + i] += gy[o * run + i];
                            }
                          });
}

Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  std::vector<double> out(x.value().begin(), x.value().end());
  const std::size_t ix = x.id();
  return x.graph().record("reshape", std::move(shape), std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const auto& gy = g.node(self).grad;
    auto gx = g.grad_buffer(ix);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
  });
}

Var softmax(Var x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " + shape_string(s));
  }
  const Extent e = extent_along(s, axis);
  auto xv = x.value();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < e.outer; ++o) {
    for (std::size_t in = 0; in < e.inner; ++in) {
      const std::size_t base = o * e.axis * e.inner + in;
      double mx = xv[base];
      for (std::size_t a = 1; a < e.axis; ++a) mx = std::max(mx, xv[base + a * e.inner]);
      double total = 0.0;
      for (std::size_t a = 0; a < e.axis; ++a) {
        const double v = std::exp(clamp_exp_arg(xv[base + a * e.inner] - mx));
        out[base + a * e.inner] = v;
        total += v;
      }
      for (std::size_t a = 0; a < e.axis; ++a) out[base + a * e.inner] /= total;
    }
  }
  const std::size_t ix = x.id();
  return x.graph().record("softmax", s, std::move(out), {ix}, [ix, e](Graph& g, std::size_t self) {
    const auto& node = g.node(self);
    const auto& y = node.value;
    const auto& gy = node.grad;
    auto gx = g.grad_buffer(ix);
    for (std::size_t o = 0; o < e.outer; ++o) {
      for (std::size_t in = 0; in < e.inner; ++in) {
        const std::size_t base = o * e.axis * e.inner + in;
        double dot = 0.0;
        for (std::size_t a = 0; a < e.axis; ++a) dot += gy[base + a * e.inner] * y[base + a * e.inner];
        for (std::size_t a = 0; a < e.axis; ++a) {
          const std::size_t i = base + a * e.inner;
          gx[i] += y[i] * (gy[i] - dot);
        }
      }
    }
  });
}

Var cross_entropy(Var probs, Var target, std::span<const double> mask, std::optional<double> normalizer) {
  require_same_graph(probs, target, "cross_entropy");
  const Shape& s = probs.shape();
  if (s.size() != 2 || target.shape() != s) {
    throw DimensionError("cross_entropy: probs " + shape_string(s) + " vs target " + shape_string(target.shape()));
  }
  const std::size_t rows = s[0], cols = s[1];
  check_mask(mask, rows, "cross_entropy");
  const double n = resolve_normalizer(mask, normalizer, "cross_entropy");
  auto p = probs.value();
  auto t = target.value();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r] == 0.0) continue;
    double row = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double tv = t[r * cols + c];
      if (tv != 0.0) row += tv * std::log(std::max(p[r * cols + c], kLogFloor));
    }
    total += mask[r] * row;
  }
  std::vector<double> m(mask.begin(), mask.end());
  const std::size_t ip = probs.id();
  const std::size_t it = target.id();
  return probs.graph().record("cross_entropy", Shape{}, {-total / n}, {ip, it},
                              [ip, it, m = std::move(m), n, rows, cols](Graph& g, std::size_t self) {
                                if (!g.needs_grad(ip)) return;
                                const double gy = g.node(self).grad[0];
                                const auto& p = g.node(ip).value;
                                const auto& t = g.node(it).value;
                                auto gp = g.grad_buffer(ip);
                                for (std::size_t r = 0; r < rows; ++r) {
                                  if (m[r] == 0.0) continue;
                                  for (std::size_t c = 0; c < cols; ++c) {
                                    const std::size_t i = r * cols + c;
                                    if (t[i] != 0.0 && p[i] > kLogFloor) gp[i] -= gy * m[r] * t[i] / (n * p[i]);
                                  }
                                }
                              });
}

Var mse(Var x, Var target, std::span<const double> mask, std::optional<double> normalizer) {
  require_same_graph(x, target, "mse");
  const Shape& s = x.shape();
  if (s.size() != 2 || target.shape() != s) {
    throw DimensionError("mse: input " + shape_string(s) + " vs target " + shape_string(target.shape()));
  }
  const std::size_t rows = s[0], cols = s[1];
  check_mask(mask, rows, "mse");
  const double denom = resolve_normalizer(mask, normalizer, "mse") * static_cast<double>(cols);
  auto xv = x.value();
  auto tv = target.value();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r] == 0.0) continue;
    double row = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = xv[r * cols + c] - tv[r * cols + c];
      row += d * d;
    }
    total += mask[r] * row;
  }
  std::vector<double> m(mask.begin(), mask.end());
  const std::size_t ix = x.id();
  const std::size_t it = target.id();
  return x.graph().record("mse", Shape{}, {total / denom}, {ix, it},
                          [ix, it, m = std::move(m), denom, rows, cols](Graph& g, std::size_t self) {
                            const double gy = g.node(self).grad[0];
                            const auto& xv = g.node(ix).value;
                            const auto& tv = g.node(it).value;
                            const bool gx_on = g.needs_grad(ix);
                            const bool gt_on = g.needs_grad(it);
                            for (std::size_t r = 0; r < rows; ++r) {
                              if (m[r] == 0.0) continue;
                              for (std::size_t c = 0; c < cols; ++c) {
                                const std::size_t i = r * cols + c;
                                const double d = gy * m[r] * 2.0 * (xv[i] - tv[i]) / denom;
                                if (gx_on) g.grad_buffer(ix)[i] += d;
                                if (gt_on) g.grad_buffer(it)[i] -= d;
                              }
                            }
                          });
}

Var dropout(Var x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout: rate must lie in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto xv = x.value();
  std::vector<double> keep(xv.size());
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    keep[i] = uniform01(rng) >= p ? keep_scale : 0.0;
    out[i] = xv[i] * keep[i];
  }
  const std::size_t ix = x.id();
  return x.graph().record("dropout", x.shape(), std::move(out), {ix},
                          [ix, keep = std::move(keep)](Graph& g, std::size_t self) {
                            const auto& gy = g.node(self).grad;
                            auto gx = g.grad_buffer(ix);
                            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * keep[i];
                          });
}

}  // namespace hner
