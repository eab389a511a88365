// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "liam/kernels.hpp"
#include "liam/params.hpp"

namespace {

using liam::kernels::row_major;

std::vector<float> random_matrix(std::size_t n, std::uint64_t seed) {
  liam::Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = rng.uniform(-1.0f, 1.0f);
  return v;
}

template <bool Parallel>
void bm_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n * n, 1), b = random_matrix(n * n, 2);
  std::vector<float> out(n * n);
  for (auto _ : state) {
    std::fill(out.begin(), out.end(), 0.0f);
    if constexpr (Parallel) {
      liam::kernels::gemm_parallel(row_major(a.data(), n, n), row_major(b.data(), n, n), out.data());
    } else {
      liam::kernels::gemm_serial(row_major(a.data(), n, n), row_major(b.data(), n, n), out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void bm_softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 256;
  const auto x = random_matrix(rows * cols, 3);
  std::vector<float> y(rows * cols);
  for (auto _ : state) {
    if constexpr (Parallel) {
      liam::kernels::softmax_rows_parallel(x.data(), nullptr, y.data(), rows, cols);
    } else {
      liam::kernels::softmax_rows_serial(x.data(), nullptr, y.data(), rows, cols);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void bm_standardize(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 64;
  const auto x = random_matrix(rows * cols, 4);
  std::vector<float> xhat(rows * cols), inv(rows);
  for (auto _ : state) {
    if constexpr (Parallel) {
      liam::kernels::standardize_rows_parallel(x.data(), xhat.data(), inv.data(), rows, cols, 1e-5f);
    } else {
      liam::kernels::standardize_rows_serial(x.data(), xhat.data(), inv.data(), rows, cols, 1e-5f);
    }
    benchmark::DoNotOptimize(xhat.data());
  }
}

}  // namespace

BENCHMARK(bm_gemm<false>)->Name("gemm/serial")->RangeMultiplier(2)->Range(32, 512);
BENCHMARK(bm_gemm<true>)->Name("gemm/parallel")->RangeMultiplier(2)->Range(32, 512)->UseRealTime();
BENCHMARK(bm_softmax<false>)->Name("softmax/serial")->Range(64, 4096);
BENCHMARK(bm_softmax<true>)->Name("softmax/parallel")->Range(64, 4096)->UseRealTime();
BENCHMARK(bm_standardize<false>)->Name("layer_norm/serial")->Range(64, 4096);
BENCHMARK(bm_standardize<true>)->Name("layer_norm/parallel")->Range(64, 4096)->UseRealTime();

BENCHMARK_MAIN();
