#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sddlab/autodiff.hpp"
#include "sddlab/pruning.hpp"
#include "sddlab/vit.hpp"

namespace {

using namespace sddlab;

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = normal(rng);
  return v;
}

void BM_MatmulKernel(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_values(m * k, 1);
  const auto b = random_values(k * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    matmul_kernel<float>(a, b, c, m, k, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(
      2.0 * static_cast<double>(m * k * n), benchmark::Counter::kIsIterationInvariantRate,
      benchmark::Counter::kIs1000);
}
BENCHMARK(BM_MatmulKernel)->Args({320, 64, 64})->Args({320, 64, 128})->Args({64, 320, 64});

Tensor<float> random_batch(const vit::ViTConfig& c, std::size_t batch) {
  return Tensor<float>({batch, c.channels, c.image_size, c.image_size},
                       random_values(batch * c.channels * c.image_size * c.image_size, 3));
}

void BM_ViTForward(benchmark::State& state) {
  vit::ViTConfig c;
  c.num_classes = 4;
  const auto params = vit::init_params<float>(c, 7);
  const auto batch = random_batch(c, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vit::vit_forward(c, params, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ViTForward)->Arg(64)->Arg(256);

void BM_ViTForwardBackward(benchmark::State& state) {
  vit::ViTConfig c;
  c.num_classes = 4;
  const auto params = vit::init_params<float>(c, 7);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto batch = random_batch(c, n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % c.num_classes);
  for (auto _ : state) {
    Tape<float> tape;
    auto bound = vit::bind(tape, params, true);
    auto loss = cross_entropy(vit::vit_logits(tape, c, bound, batch), std::span<const int>(labels));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(bound.vars.front()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ViTForwardBackward)->Arg(64);

void BM_GlobalMagnitudePrune(benchmark::State& state) {
  vit::ViTConfig c;
  c.num_classes = 4;
  const auto fresh = vit::init_params<float>(c, 11);
  for (auto _ : state) {
    state.PauseTiming();
    auto params = fresh;
    auto mask = pruning::PruneMask::dense(params);
    state.ResumeTiming();
    benchmark::DoNotOptimize(pruning::magnitude_prune(params, mask, 0.2, pruning::Scope::Global));
  }
}
BENCHMARK(BM_GlobalMagnitudePrune);

}  // namespace

BENCHMARK_MAIN();
