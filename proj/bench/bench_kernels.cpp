// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "hetermpc/kernels.hpp"

namespace k = hetermpc::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> normal;
  std::vector<float> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<float> c(n * n);
  const k::GemmArgs args{false, false, n, n, n, false};
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::gemm(args, a.data(), b.data(), c.data());
    } else {
      k::serial::gemm(args, a.data(), b.data(), c.data());
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
  state.counters["threads"] = Parallel ? omp_get_max_threads() : 1;
}

template <bool Parallel>
void BM_Softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vec(n * n, 3);
  std::vector<float> y(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::softmax_rows(x.data(), y.data(), n, n, true);
    } else {
      k::serial::softmax_rows(x.data(), y.data(), n, n, true);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}

template <bool Parallel>
void BM_LayerNorm(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 256;
  const auto x = random_vec(rows * cols, 4);
  const std::vector<float> gain(cols, 1.0f), bias(cols, 0.0f);
  std::vector<float> y(rows * cols), xhat(rows * cols), rstd(rows);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::layer_norm_rows(x.data(), gain.data(), bias.data(), y.data(), xhat.data(), rstd.data(), rows, cols,
                              1e-12f);
    } else {
      k::serial::layer_norm_rows(x.data(), gain.data(), bias.data(), y.data(), xhat.data(), rstd.data(), rows, cols,
                                 1e-12f);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows * cols));
}

template <bool Parallel>
void BM_Gelu(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_vec(n, 5);
  std::vector<float> y(n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::omp::gelu(x.data(), y.data(), n);
    } else {
      k::serial::gelu(x.data(), y.data(), n);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/omp")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Softmax<false>)->Name("softmax/serial")->Arg(128)->Arg(512);
BENCHMARK(BM_Softmax<true>)->Name("softmax/omp")->Arg(128)->Arg(512);
BENCHMARK(BM_LayerNorm<false>)->Name("layer_norm/serial")->Arg(256)->Arg(2048);
BENCHMARK(BM_LayerNorm<true>)->Name("layer_norm/omp")->Arg(256)->Arg(2048);
BENCHMARK(BM_Gelu<false>)->Name("gelu/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_Gelu<true>)->Name("gelu/omp")->Arg(1 << 16)->Arg(1 << 20);

BENCHMARK_MAIN();
