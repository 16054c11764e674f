#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "sbl/numerics/kernels.hpp"

namespace k = sbl::kernels;

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Shapes from the desk point encoder: 64 clouds of 256 points through a
// 64 -> 128 per-point layer.
constexpr k::AffineDims kDims{64 * 256, 64, 128};

template <auto Kernel>
void BM_AffineForward(benchmark::State& state) {
  k::set_thread_count(static_cast<int>(state.range(0)));
  const auto x = random_values(kDims.rows * kDims.in, 1);
  const auto w = random_values(kDims.in * kDims.out, 2);
  const auto b = random_values(kDims.out, 3);
  std::vector<double> out(kDims.rows * kDims.out);
  for (auto _ : state) {
    Kernel(x, w, b, out, kDims);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * kDims.rows);
}

template <auto Kernel>
void BM_AffineGradWeight(benchmark::State& state) {
  k::set_thread_count(static_cast<int>(state.range(0)));
  const auto x = random_values(kDims.rows * kDims.in, 1);
  const auto dout = random_values(kDims.rows * kDims.out, 2);
  std::vector<double> dw(kDims.in * kDims.out);
  for (auto _ : state) {
    Kernel(x, dout, dw, kDims);
    benchmark::DoNotOptimize(dw.data());
  }
}

template <auto Kernel>
void BM_SegmentMax(benchmark::State& state) {
  k::set_thread_count(static_cast<int>(state.range(0)));
  constexpr std::size_t sets = 64, points = 256, cols = 128;
  const auto x = random_values(sets * points * cols, 4);
  std::vector<std::size_t> offsets;
  for (std::size_t g = 0; g <= sets; ++g) offsets.push_back(g * points);
  std::vector<double> out(sets * cols);
  std::vector<std::size_t> argmax(sets * cols);
  for (auto _ : state) {
    Kernel(x, offsets, cols, out, argmax);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void BM_PairwiseSqdist(benchmark::State& state) {
  k::set_thread_count(static_cast<int>(state.range(0)));
  constexpr std::size_t n = 960, dim = 64;
  const auto a = random_values(n * dim, 5);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    Kernel(a, a, out, n, n, dim);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

// The argument is the thread count; serial kernels ignore it.
BENCHMARK(BM_AffineForward<k::serial::affine_forward>)->Arg(1)->UseRealTime();
BENCHMARK(BM_AffineForward<k::parallel::affine_forward>)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime();
BENCHMARK(BM_AffineGradWeight<k::serial::affine_grad_weight>)->Arg(1)->UseRealTime();
BENCHMARK(BM_AffineGradWeight<k::parallel::affine_grad_weight>)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime();
BENCHMARK(BM_SegmentMax<k::serial::segment_max>)->Arg(1)->UseRealTime();
BENCHMARK(BM_SegmentMax<k::parallel::segment_max>)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime();
BENCHMARK(BM_PairwiseSqdist<k::serial::pairwise_sqdist>)->Arg(1)->UseRealTime();
BENCHMARK(BM_PairwiseSqdist<k::parallel::pairwise_sqdist>)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime();

BENCHMARK_MAIN();
