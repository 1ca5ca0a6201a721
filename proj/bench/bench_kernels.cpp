// Serial reference vs OpenMP kernels at the shapes the models use: batches of
// 30-token sentences against 300-dim embeddings and 4H-wide gate matrices.

#include <benchmark/benchmark.h>

#include <vector>

#include "hner/graph.hpp"
#include "hner/kernels.hpp"
#include "hner/models.hpp"
#include "hner/rng.hpp"

namespace {

using namespace hner;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, -1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_GemmNt(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto a = random_values(m * k, 1), b = random_values(n * k, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::gemm_nt(m, n, k, a, b, c);
    } else {
      kernels::serial::gemm_nt(m, n, k, a, b, c);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * k));
}

template <bool Parallel>
void BM_GemmTnAcc(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto a = random_values(k * m, 3), b = random_values(k * n, 4);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::parallel::gemm_tn_acc(m, n, k, a, b, c);
    } else {
      kernels::serial::gemm_tn_acc(m, n, k, a, b, c);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * n * k));
}

template <bool Parallel>
void BM_BaseForward(benchmark::State& state) {
  kernels::ScopedMode mode(Parallel ? kernels::Mode::Parallel : kernels::Mode::Serial);
  Rng rng(5);
  BaseTaggerConfig cfg;
  cfg.embedding_dim = 300;
  const BaseTagger model(cfg, rng);
  Tensor emb({30, 300});
  for (double& v : emb.values()) v = uniform(rng, -1.0, 1.0);
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(model.forward(g, g.input(emb), 30).value().data());
  }
}

// {rows, cols, inner}: input projection of a sentence batch, gate weights, output head.
void GemmShapes(benchmark::internal::Benchmark* b) {
  b->Args({240, 400, 300})->Args({30, 400, 300})->Args({400, 300, 240})->Args({1024, 1024, 64});
}

}  // namespace

BENCHMARK(BM_GemmNt<false>)->Name("gemm_nt/serial")->Apply(GemmShapes);
BENCHMARK(BM_GemmNt<true>)->Name("gemm_nt/parallel")->Apply(GemmShapes);
BENCHMARK(BM_GemmTnAcc<false>)->Name("gemm_tn_acc/serial")->Apply(GemmShapes);
BENCHMARK(BM_GemmTnAcc<true>)->Name("gemm_tn_acc/parallel")->Apply(GemmShapes);
BENCHMARK(BM_BaseForward<false>)->Name("base_forward/serial");
BENCHMARK(BM_BaseForward<true>)->Name("base_forward/parallel");

BENCHMARK_MAIN();
