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

#include <gtest/gtest.h>

#include "harness.hpp"
#include "labgatr/layers.hpp"

namespace labgatr::layers {
namespace {

using testing_harness::layer_grad_error;
using testing_harness::random_tensor;
using testing_harness::relative_deviation;
namespace ad = autodiff;

Tensor eval(const testing_harness::LayerFn& f, const ParameterStore& store, const Tensor& x) {
  Tape t;
  auto b = testing_harness::bind_constants(t, store);
  return t.value(f(t, b, t.constant(x)));
}

// layer(g X) against g layer(X) over random motions with and without reflection.
double equivariance_error(const testing_harness::LayerFn& f, const ParameterStore& store,
                          const Tensor& x, int motions = 20) {
  double worst = 0.0;
  const Tensor y = eval(f, store, x);
  for (int s = 0; s < motions; ++s) {
    auto g = pga::random_rigid_motion(500 + s, true);
    if (s % 2 == 0) g = g.compose(pga::Versor::reflection({0.2, -0.7, 0.4}, 0.3));
    worst = std::max(worst, relative_deviation(eval(f, store, transform_features(x, g)),
                                               transform_features(y, g)));
  }
  return worst;
}

Tensor random_features(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor({n, c, 16}, rng);
}

TEST(EquiLinear, IdentityParameters) {
  ParameterStore store;
  std::vector<double> alpha(3 * 3 * 5, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 5; ++k) alpha[(i * 3 + i) * 5 + k] = 1.0;
  }
  store.add("l.alpha", {3, 3, 5}, alpha);
  store.add("l.beta", {3, 3, 4}, std::vector<double>(36, 0.0));
  store.add("l.bias", {3}, {0.0, 0.0, 0.0});
  EquiLinear lin("l", 3, 3);
  const auto x = random_features(4, 3, 1);
  const auto y = eval([&](Tape& t, const Bindings& p, Var v) { return lin(t, p, v); }, store, x);
  EXPECT_EQ(y.data, x.data);
}

TEST(EquiLinear, BetaOnlyLandsOnE0Blades) {
  ParameterStore store;
  store.add("l.alpha", {1, 1, 5}, std::vector<double>(5, 0.0));
  store.add("l.beta", {1, 1, 4}, {0.7, -1.1, 0.3, 2.0});
  EquiLinear lin("l", 1, 1, false);
  Tensor x({1, 1, 16});
  const auto p = pga::embed(pga::Point{{1.0, -2.0, 0.5}});
  std::copy_n(p.coeffs().data(), 16, x.data.data());
  const auto y = eval([&](Tape& t, const Bindings& b, Var v) { return lin(t, b, v); }, store, x);
  for (std::size_t i = 0; i < 16; ++i) {
    if (!pga::contains_e0(i)) EXPECT_EQ(y.data[i], 0.0) << pga::kBladeName[i];
  }
  EXPECT_NE(y.data[pga::blade::kE0123], 0.0);
}

TEST(EquiLinear, EquivariantAndDifferentiable) {
  Rng rng(2);
  ParameterStore store;
  EquiLinear lin("l", 3, 2);
  lin.declare(store, rng);
  for (auto& x : store.at("l.bias").value) x = 0.3;
  testing_harness::LayerFn f = [&](Tape& t, const Bindings& p, Var v) { return lin(t, p, v); };
  const auto x = random_features(5, 3, 3);
  EXPECT_LT(equivariance_error(f, store, x), 1e-9);
  EXPECT_LT(layer_grad_error(f, store, x), 1e-6);
  EXPECT_EQ(store.num_scalars(), lin.num_parameters());
}

TEST(EquiLinear, ShapeMismatchThrows) {
  Rng rng(2);
  ParameterStore store;
  EquiLinear lin("l", 3, 2);
  lin.declare(store, rng);
  EXPECT_THROW(eval([&](Tape& t, const Bindings& p, Var v) { return lin(t, p, v); }, store,
                    random_features(2, 4, 1)),
               ad::ShapeError);
}

TEST(LayerNorm, ZeroScaleAndEquivariance) {
  ParameterStore none;
  testing_harness::LayerFn f = [](Tape& t, const Bindings&, Var v) { return equi_layernorm(t, v); };
  Tensor zero({2, 3, 16});
  EXPECT_EQ(eval(f, none, zero).data, zero.data);
  const auto x = random_features(3, 4, 5);
  auto x10 = x;
  for (auto& v : x10.data) v *= 10.0;
  EXPECT_LT(relative_deviation(eval(f, none, x10), eval(f, none, x)), 1e-6);
  EXPECT_LT(equivariance_error(f, none, x), 1e-9);
  EXPECT_LT(layer_grad_error(f, none, x), 1e-6);
}

TEST(GatedGelu, ZeroGateSaturationAndEquivariance) {
  ParameterStore none;
  testing_harness::LayerFn f = [](Tape& t, const Bindings&, Var v) { return gated_gelu(t, v); };
  auto x = random_features(2, 2, 7);
  x.data[0] = 0.0;
  auto y = eval(f, none, x);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(y.data[i], 0.0);
  // Large gates pass the multivector through scaled by GELU(x_s) ~ x_s.
  x.data[16] = 20.0;
  y = eval(f, none, x);
  for (std::size_t i = 16; i < 32; ++i) EXPECT_NEAR(y.data[i], 20.0 * x.data[i], 1e-12 * std::abs(x.data[i]) + 1e-15);
  EXPECT_LT(equivariance_error(f, none, random_features(3, 2, 8)), 1e-10);
  EXPECT_LT(layer_grad_error(f, none, random_features(3, 2, 9)), 1e-6);
}

TEST(GeometricMlp, ZeroOutputAndEquivariance) {
  Rng rng(4);
  ParameterStore store;
  GeometricMlp mlp("m", 3, 3, 6);
  mlp.declare(store, rng, Init::kZero);
  testing_harness::LayerFn f = [&](Tape& t, const Bindings& p, Var v) { return mlp(t, p, v); };
  const auto x = random_features(4, 3, 10);
  for (double v : eval(f, store, x).data) EXPECT_EQ(v, 0.0);

  ParameterStore live;
  mlp.declare(live, rng, Init::kRandom);
  EXPECT_LT(equivariance_error(f, live, x), 1e-8);
  EXPECT_LT(layer_grad_error(f, live, x), 1e-4);
}

TEST(Attention, SingleTokenAndSymmetricPair) {
  Rng rng(5);
  ParameterStore store;
  GeometricAttention attn("a", {4, 2});
  attn.declare(store, rng, Init::kRandom);
  {
    Tape t;
    auto b = testing_harness::bind_constants(t, store);
    std::vector<Var> w;
    attn(t, b, t.constant(random_features(1, 4, 1)), &w);
    for (auto v : w) EXPECT_EQ(t.value(v).data[0], 1.0);
  }
  {
    auto x = random_features(2, 4, 2);
    std::copy_n(x.data.begin(), 64, x.data.begin() + 64);
    Tape t;
    auto b = testing_harness::bind_constants(t, store);
    std::vector<Var> w;
    attn(t, b, t.constant(x), &w);
    for (auto v : w) {
      for (double a : t.value(v).data) EXPECT_EQ(a, 0.5);
    }
  }
}

TEST(Attention, RowsSumToOneAndPermutationEquivariance) {
  Rng rng(6);
  ParameterStore store;
  GeometricAttention attn("a", {8, 4});
  attn.declare(store, rng, Init::kRandom);
  const auto x = random_features(6, 8, 3);
  Tape t;
  auto b = testing_harness::bind_constants(t, store);
  std::vector<Var> w;
  auto y = t.value(attn(t, b, t.constant(x), &w));
  for (auto v : w) {
    for (std::size_t r = 0; r < 6; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < 6; ++j) s += t.value(v).data[r * 6 + j];
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
  const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  Tensor xp(x.shape);
  for (std::size_t i = 0; i < 6; ++i) {
    std::copy_n(x.data.begin() + perm[i] * 128, 128, xp.data.begin() + i * 128);
  }
  auto yp = eval([&](Tape& tt, const Bindings& p, Var v) { return attn(tt, p, v); }, store, xp);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 128; ++j) {
      EXPECT_NEAR(yp.data[i * 128 + j], y.data[perm[i] * 128 + j], 1e-12);
    }
  }
}

TEST(Attention, HeadsMustDivideChannels) {
  EXPECT_THROW(GeometricAttention("a", {6, 4}), std::invalid_argument);
}

TEST(Attention, EquivariantAndDifferentiable) {
  Rng rng(7);
  ParameterStore store;
  GeometricAttention attn("a", {8, 4});
  attn.declare(store, rng, Init::kRandom);
  testing_harness::LayerFn f = [&](Tape& t, const Bindings& p, Var v) { return attn(t, p, v); };
  EXPECT_LT(equivariance_error(f, store, random_features(16, 8, 4)), 1e-7);
  EXPECT_LT(layer_grad_error(f, store, random_features(5, 8, 5)), 1e-4);
}

TEST(TransformerBlock, ZeroInitIsIdentity) {
  Rng rng(8);
  ParameterStore store;
  TransformerBlock block("block0", {8, 4});
  block.declare(store, rng, Init::kZero);
  const auto x = random_features(5, 8, 6);
  auto y = eval([&](Tape& t, const Bindings& p, Var v) { return block(t, p, v); }, store, x);
  EXPECT_EQ(y.data, x.data);
  EXPECT_TRUE(store.contains("block0.attn.q.alpha"));
  EXPECT_TRUE(store.contains("block0.mlp.out.beta"));
}

TEST(TransformerBlock, FourBlocksEquivariantAndShapePreserving) {
  Rng rng(9);
  ParameterStore store;
  std::vector<TransformerBlock> blocks;
  for (int i = 0; i < 4; ++i) {
    blocks.emplace_back("block" + std::to_string(i), AttentionConfig{8, 4});
    blocks.back().declare(store, rng, Init::kRandom);
  }
  testing_harness::LayerFn f = [&](Tape& t, const Bindings& p, Var v) {
    for (const auto& b : blocks) v = b(t, p, v);
    return v;
  };
  const auto x = random_features(16, 8, 7);
  EXPECT_EQ(eval(f, store, x).shape, x.shape);
  EXPECT_LT(equivariance_error(f, store, x), 1e-7);
}

TEST(TransformerBlock, GradientCheck) {
  Rng rng(10);
  ParameterStore store;
  TransformerBlock block("block0", {4, 2});
  block.declare(store, rng, Init::kRandom);
  testing_harness::LayerFn f = [&](Tape& t, const Bindings& p, Var v) { return block(t, p, v); };
  EXPECT_LT(layer_grad_error(f, store, random_features(8, 4, 8)), 1e-4);
}

TEST(Pooling, SelfTranslationIsIdentityElement) {
  const std::vector<pga::Vec3> pos = {{0, 0, 0}, {1, 0, 0}, {3, 4, 0}};
  const auto rel = relative_translations(pos, {0, 2}, {0, 0, 1});
  EXPECT_EQ(rel.data[0], 1.0);
  for (std::size_t i = 1; i < 16; ++i) EXPECT_EQ(rel.data[i], 0.0);
  EXPECT_EQ(rel.data[16 + pga::blade::kE01], -0.5);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(rel.data[32 + i], i == 0 ? 1.0 : 0.0);
}

TEST(Pooling, TranslationsTransformWithTheMesh) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<pga::Vec3> pos(12);
  for (auto& p : pos) p = {u(rng), u(rng), u(rng)};
  const std::vector<std::uint32_t> coarse = {0, 5, 9};
  std::vector<std::uint32_t> assign(12);
  for (std::size_t i = 0; i < 12; ++i) assign[i] = i % 3;
  const auto rel = relative_translations(pos, coarse, assign);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto g = pga::random_rigid_motion(s, true);
    std::vector<pga::Vec3> moved;
    for (const auto& p : pos) moved.push_back(pga::apply_to_point(g, p));
    EXPECT_LT(relative_deviation(relative_translations(moved, coarse, assign),
                                 transform_features(rel, g)),
              1e-10);
  }
}

TEST(Pooling, EquivariantAndDifferentiable) {
  Rng rng(12);
  ParameterStore store;
  PoolingMlp pool("pool", 3, 4);
  pool.declare(store, rng);
  std::mt19937_64 r2(13);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<pga::Vec3> pos(6);
  for (auto& p : pos) p = {u(r2), u(r2), u(r2)};
  const auto rel = relative_translations(pos, {1, 4}, {0, 0, 1, 0, 1, 1});
  // Translation features ride along as the last channel of the input.
  testing_harness::LayerFn f = [&](Tape& t, const Bindings& p, Var v) {
    return pool(t, p, ad::slice(t, v, 1, 0, 3), ad::slice(t, v, 1, 3, 1));
  };
  Tensor x({6, 4, 16});
  const auto feat = random_features(6, 3, 14);
  for (std::size_t i = 0; i < 6; ++i) {
    std::copy_n(feat.data.begin() + i * 48, 48, x.data.begin() + i * 64);
    std::copy_n(rel.data.begin() + i * 16, 16, x.data.begin() + i * 64 + 48);
  }
  EXPECT_LT(equivariance_error(f, store, x), 1e-8);
  EXPECT_LT(layer_grad_error(f, store, x), 1e-4);
}

TEST(Interpolation, EquivariantAndDifferentiable) {
  Rng rng(15);
  ParameterStore store;
  InterpolationMlp interp("interp", 2, 3, 1);
  interp.declare(store, rng);
  testing_harness::LayerFn f = [&](Tape& t, const Bindings& p, Var v) {
    return interp(t, p, ad::slice(t, v, 1, 0, 2), ad::slice(t, v, 1, 2, 3));
  };
  const auto x = random_features(5, 5, 16);
  EXPECT_LT(equivariance_error(f, store, x), 1e-8);
  EXPECT_LT(layer_grad_error(f, store, x), 1e-4);
}

TEST(Interpolation, TokenMismatchThrows) {
  Rng rng(15);
  ParameterStore store;
  InterpolationMlp interp("interp", 2, 3, 1);
  interp.declare(store, rng);
  Tape t;
  auto b = testing_harness::bind_constants(t, store);
  EXPECT_THROW(interp(t, b, t.constant(random_features(4, 2, 1)), t.constant(random_features(5, 3, 1))),
               ad::ShapeError);
}

}  // namespace
}  // namespace labgatr::layers
