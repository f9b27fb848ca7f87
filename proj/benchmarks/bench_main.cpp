// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "manet/degrade.hpp"
#include "manet/maconv.hpp"
#include "manet/network.hpp"
#include "manet/ops.hpp"
#include "manet/training.hpp"

namespace nn = manet::nn;
namespace dg = manet::degradation;
namespace md = manet::model;

namespace {

nn::Tensor<float> random_tensor(nn::Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  nn::Tensor<float> t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

void BM_Conv2d3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  const auto x = nn::constant(random_tensor({1, c, hw, hw}, 1));
  const auto w = nn::constant(random_tensor({c, c, 3, 3}, 2));
  const auto b = nn::constant(random_tensor({1, c, 1, 1}, 3));
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, w, b, 1, 1).value().raw());
  state.counters["MAC/s"] = benchmark::Counter(9.0 * c * c * hw * hw, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv2d3x3)->Args({16, 48})->Args({64, 48})->Args({128, 32})->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  nn::Parameter<float> w("w", random_tensor({c, c, 3, 3}, 2));
  nn::Parameter<float> b("b", random_tensor({1, c, 1, 1}, 3));
  const auto x = random_tensor({1, c, hw, hw}, 1);
  for (auto _ : state) {
    nn::Tape<float> tape;
    const auto y = nn::conv2d(nn::constant(x, &tape), nn::parameter(w, &tape), nn::parameter(b, &tape), 1, 1);
    tape.backward(nn::sum(y));
    benchmark::DoNotOptimize(w.grad.raw());
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({16, 48})->Args({64, 48})->Unit(benchmark::kMillisecond);

void BM_MAConvForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  md::MAConvLayer<float> layer({c, c, s}, "m");
  std::mt19937_64 rng(4);
  layer.init(rng);
  const auto x = nn::constant(random_tensor({1, c, 32, 32}, 5));
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x, nullptr).value().raw());
  state.counters["MACs"] = static_cast<double>(layer.mac_count(32, 32));
}
BENCHMARK(BM_MAConvForward)->Args({64, 2})->Args({64, 4})->Args({128, 2})->Unit(benchmark::kMillisecond);

void BM_BlurVariant(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const auto img = manet::training::procedural_image(hw, hw, 6);
  std::mt19937_64 rng(7);
  const auto field = dg::make_kernel_field(5, hw, hw, 40, 4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(dg::blur_variant(img, field).data.data());
  state.SetItemsProcessed(state.iterations() * hw * hw);
}
BENCHMARK(BM_BlurVariant)->Arg(96)->Arg(192)->Unit(benchmark::kMillisecond);

void BM_BlurInvariant(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const auto img = manet::training::procedural_image(hw, hw, 6);
  const auto k = dg::synth_kernel(dg::KernelParams::make(6, 1, 0.78));
  for (auto _ : state) benchmark::DoNotOptimize(dg::blur_invariant(img, k).data.data());
  state.SetItemsProcessed(state.iterations() * hw * hw);
}
BENCHMARK(BM_BlurInvariant)->Arg(96)->Arg(192)->Unit(benchmark::kMillisecond);

void BM_NetworkForward(benchmark::State& state) {
  md::MANetConfig cfg;
  cfg.channels = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 2,
                  static_cast<int>(state.range(0))};
  md::MANet<float> net(cfg, 8);
  const auto lr = random_tensor({1, 1, 24, 24}, 9);
  for (auto _ : state) benchmark::DoNotOptimize(net.estimate(lr).raw());
}
BENCHMARK(BM_NetworkForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_TrainStepTiny(benchmark::State& state) {
  manet::training::TrainConfig cfg;
  cfg.crop = 96;
  cfg.batch = 1;
  cfg.channels = {16, 32, 16};
  cfg.single_image = true;
  cfg.augment = false;
  manet::training::Trainer<float> trainer(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_step());
}
BENCHMARK(BM_TrainStepTiny)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
