#include <gtest/gtest.h>

#include <cstring>
#include <vector>

#include "hner/kernels.hpp"
#include "hner/models.hpp"
#include "hner/parallel.hpp"
#include "test_util.hpp"

using namespace hner;

namespace {

std::vector<double> random_values(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, -1.0, 1.0);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Dims {
  std::size_t m, n, k;
};

}  // namespace

TEST(Kernels, ParallelMatchesSerialBitwise) {
  Rng rng(11);
  const Dims cases[] = {{1, 1, 1}, {3, 5, 7}, {64, 64, 64}, {257, 31, 129}, {30, 1024, 300}, {1, 512, 256}};
  for (const auto& d : cases) {
    const auto a = random_values(d.m * d.k, rng);
    const auto b = random_values(d.k * d.n, rng);
    const auto bt = random_values(d.n * d.k, rng);
    const auto at = random_values(d.k * d.m, rng);
    const auto init = random_values(d.m * d.n, rng);

    std::vector<double> s(d.m * d.n), p(d.m * d.n);
    kernels::serial::gemm_nn(d.m, d.n, d.k, a, b, s);
    kernels::parallel::gemm_nn(d.m, d.n, d.k, a, b, p);
    EXPECT_TRUE(bitwise_equal(s, p)) << "gemm_nn " << d.m << "x" << d.n << "x" << d.k;

    kernels::serial::gemm_nt(d.m, d.n, d.k, a, bt, s);
    kernels::parallel::gemm_nt(d.m, d.n, d.k, a, bt, p);
    EXPECT_TRUE(bitwise_equal(s, p)) << "gemm_nt";

    s = init;
    p = init;
    kernels::serial::gemm_tn_acc(d.m, d.n, d.k, at, b, s);
    kernels::parallel::gemm_tn_acc(d.m, d.n, d.k, at, b, p);
    EXPECT_TRUE(bitwise_equal(s, p)) << "gemm_tn_acc";

    s = init;
    p = init;
    kernels::serial::gemm_nn_acc(d.m, d.n, d.k, a, b, s);
    kernels::parallel::gemm_nn_acc(d.m, d.n, d.k, a, b, p);
    EXPECT_TRUE(bitwise_equal(s, p)) << "gemm_nn_acc";
  }
}

TEST(Kernels, SerialReferenceHandComputed) {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{5, 6};
  std::vector<double> c(2);
  kernels::serial::gemm_nn(2, 1, 2, a, b, c);
  EXPECT_EQ(c, (std::vector<double>{17, 39}));
  // a^T * b with a stored [2 x 2]: [[1,3],[2,4]] * [5,6]
  std::vector<double> acc{1, 1};
  kernels::serial::gemm_tn_acc(2, 1, 2, a, b, acc);
  EXPECT_EQ(acc, (std::vector<double>{1 + 23, 1 + 34}));
}

TEST(Kernels, ScopedModeRestoresPrevious) {
  const auto before = kernels::mode();
  {
    kernels::ScopedMode serial(kernels::Mode::Serial);
    EXPECT_EQ(kernels::mode(), kernels::Mode::Serial);
  }
  EXPECT_EQ(kernels::mode(), before);
}

TEST(Kernels, ModelOutputsIdenticalAcrossModes) {
  Rng rng(12);
  BaseTaggerConfig cfg;
  cfg.embedding_dim = 40;
  cfg.hidden_size = 64;
  BaseTagger model(cfg, rng);
  const Tensor emb = hner::test::random_tensor({30, 40}, rng);
  auto run = [&] {
    Graph g;
    auto v = model.forward(g, g.input(emb), 23).value();
    return std::vector<double>(v.begin(), v.end());
  };
  std::vector<double> serial, parallel;
  {
    kernels::ScopedMode m(kernels::Mode::Serial);
    serial = run();
  }
  {
    kernels::ScopedMode m(kernels::Mode::Parallel);
    parallel = run();
  }
  EXPECT_TRUE(bitwise_equal(serial, parallel));
}

TEST(Parallel, ForwardsFirstException) {
  std::vector<int> hits(100, 0);
  EXPECT_THROW(parallel_for(100,
                            [&](std::size_t i) {
                              hits[i] = 1;
                              if (i == 42) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
