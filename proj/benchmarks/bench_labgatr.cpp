// Copyright 2026 The labgatr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "labgatr/dataset.hpp"
#include "labgatr/layers.hpp"
#include "labgatr/model.hpp"
#include "labgatr/ops.hpp"
#include "labgatr/tokenizer.hpp"

namespace {

using namespace labgatr;

pga::Multivector random_mv(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  pga::Multivector m;
  for (std::size_t i = 0; i < pga::kNumBlades; ++i) m[i] = u(rng);
  return m;
}

void BM_GeometricProduct(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto a = random_mv(rng), b = random_mv(rng);
  for (auto _ : state) benchmark::DoNotOptimize(pga::geometric_product(a, b));
}
BENCHMARK(BM_GeometricProduct);

void BM_BuildPlan(benchmark::State& state) {
  auto p = data::sample_params(data::ToyKind::kSurface, 0, 0);
  p.rings = static_cast<std::size_t>(state.range(0)) / 70;
  p.ring_points = 70;
  const auto m = data::make_tube(data::ToyKind::kSurface, p);
  for (auto _ : state) benchmark::DoNotOptimize(tokenizer::build_plan(m.positions, {0.1, 3, 0}));
  state.counters["vertices"] = static_cast<double>(m.num_vertices());
}
BENCHMARK(BM_BuildPlan)->Arg(1400)->Arg(7000)->Unit(benchmark::kMillisecond);

void BM_AttentionForwardBackward(benchmark::State& state) {
  const auto tokens = static_cast<std::size_t>(state.range(0));
  layers::Rng rng(2);
  autodiff::ParameterStore store;
  layers::TransformerBlock block("b", {8, 4});
  block.declare(store, rng, layers::Init::kRandom);
  auto x = layers::make_features(tokens, 8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : x.data) v = u(rng);
  for (auto _ : state) {
    autodiff::Tape t;
    const auto p = autodiff::bind(t, store);
    auto y = block(t, p, t.variable(x));
    t.backward(autodiff::sum(t, y));
    benchmark::DoNotOptimize(t.size());
  }
}
BENCHMARK(BM_AttentionForwardBackward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

// One training-sample step on the volume toy with the default preset.
void BM_ModelStepVolumeToy(benchmark::State& state) {
  const model::Model m(model::preset("volume-velocity"));
  const auto params = m.init();
  const auto s = m.prepare(data::make_tube(data::ToyKind::kVolume, data::sample_params(data::ToyKind::kVolume, 0, 0)), 0);
  for (auto _ : state) {
    autodiff::Tape t;
    const auto p = autodiff::bind(t, params);
    t.backward(m.loss(t, m.forward(t, p, s), s));
    benchmark::DoNotOptimize(t.size());
  }
  state.counters["tokens"] = static_cast<double>(s.plan.n_coarse());
}
BENCHMARK(BM_ModelStepVolumeToy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
