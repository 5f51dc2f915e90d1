// OpenMP kernels vs the serial reference, at CNV-S layer shapes (batch 100).
#include <benchmark/benchmark.h>

#include <vector>

#include "fatnet/kernels.hpp"
#include "fatnet/reference.hpp"
#include "fatnet/rng.hpp"

using namespace fatnet;

namespace {

Tensor4 random_tensor(Shape4 s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor4 t(s);
  for (float& v : t.values()) v = static_cast<float>(2.0 * uniform01(rng) - 1.0);
  return t;
}

// (in_c, out_c, side) of the three CNV-S conv blocks on 28x28 input.
const std::vector<std::vector<std::int64_t>> kConvShapes = {{1, 16, 28}, {16, 32, 13}, {32, 64, 5}};

void conv_args(benchmark::internal::Benchmark* b) {
  for (const auto& s : kConvShapes) b->Args(s);
}

template <bool Parallel>
void BM_Conv2d(benchmark::State& state) {
  const auto in_c = static_cast<std::size_t>(state.range(0));
  const auto out_c = static_cast<std::size_t>(state.range(1));
  const auto side = static_cast<std::size_t>(state.range(2));
  const Tensor4 x = random_tensor({100, in_c, side, side}, 1);
  const Tensor4 w = random_tensor({out_c, in_c, 3, 3}, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::conv2d_forward(x, w, 0) : reference::conv2d(x, w, 0));
  }
}
BENCHMARK(BM_Conv2d<false>)->Name("conv2d/reference")->Apply(conv_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2d<true>)->Name("conv2d/openmp")->Apply(conv_args)->Unit(benchmark::kMillisecond);

template <bool Parallel>
void BM_FullyConnected(benchmark::State& state) {
  const Tensor4 x = random_tensor({100, 64, 3, 3}, 3);
  const Tensor4 w = random_tensor({64, 576, 1, 1}, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::fc_forward(x, w) : reference::fully_connected(x, w));
  }
}
BENCHMARK(BM_FullyConnected<false>)->Name("fc/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FullyConnected<true>)->Name("fc/openmp")->Unit(benchmark::kMicrosecond);

template <bool Parallel>
void BM_BatchNorm(benchmark::State& state) {
  const Tensor4 x = random_tensor({100, 16, 26, 26}, 5);
  const std::vector<float> gamma(16, 1.0f), beta(16, 0.0f);
  kernels::BatchNormCache cache;
  std::vector<float> var;
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(kernels::batch_norm_train(x, gamma, beta, cache, var));
    } else {
      benchmark::DoNotOptimize(reference::batch_norm(x, gamma, beta));
    }
  }
}
BENCHMARK(BM_BatchNorm<false>)->Name("batch_norm/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchNorm<true>)->Name("batch_norm/openmp")->Unit(benchmark::kMicrosecond);

template <bool Parallel>
void BM_MaxPool(benchmark::State& state) {
  const Tensor4 x = random_tensor({100, 16, 26, 26}, 6);
  std::vector<std::uint32_t> argmax;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? kernels::max_pool2d_forward(x, &argmax) : reference::max_pool2d(x));
  }
}
BENCHMARK(BM_MaxPool<false>)->Name("max_pool2d/reference")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MaxPool<true>)->Name("max_pool2d/openmp")->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
