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

#include "labgatr/verify.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "labgatr/ops.hpp"

namespace labgatr::verify {

namespace ad = autodiff;
using pga::Multivector;
using pga::Vec3;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Check finish(std::string name, double value, double threshold, Clock::time_point t0, std::string detail = {}) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.threshold = threshold;
  c.passed = threshold > 0.0 ? value < threshold : value == 0.0;
  c.seconds = seconds_since(t0);
  c.detail = std::move(detail);
  return c;
}

// Product of two basis blades from their generator bitmasks: the sign counts
// generator transpositions, e0 e0 annihilates.
std::pair<std::size_t, int> mask_product(std::size_t a, std::size_t b) {
  const unsigned ma = pga::kBladeMask[a], mb = pga::kBladeMask[b];
  if (ma & mb & 1u) return {0, 0};
  int swaps = 0;
  for (unsigned g = 0; g < 4; ++g) {
    if (mb & (1u << g)) swaps += std::popcount(ma >> (g + 1));
  }
  return {pga::blade_from_mask(ma ^ mb), swaps % 2 ? -1 : 1};
}

Multivector random_mv(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Multivector m;
  for (std::size_t i = 0; i < pga::kNumBlades; ++i) m[i] = u(rng);
  return m;
}

ad::Tensor random_features(std::size_t n, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ad::Tensor t({n, c, pga::kNumBlades});
  for (auto& x : t.data) x = u(rng);
  return t;
}

double relative_deviation(const ad::Tensor& a, const ad::Tensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    num = std::max(num, std::abs(a.data[i] - b.data[i]));
    den = std::max(den, std::abs(b.data[i]));
  }
  return den > 0.0 ? num / den : num;
}

// Proper motion for even i, composed with a reflection for odd i.
pga::Versor motion(std::uint64_t seed, std::size_t i) {
  auto g = pga::random_rigid_motion(seed * 1000003u + i, false);
  if (i % 2 == 1) {
    std::mt19937_64 rng(seed + 7 * i + 1);
    std::normal_distribution<double> n(0.0, 1.0);
    g = g.compose(pga::Versor::reflection({n(rng), n(rng), n(rng)}, n(rng)));
  }
  return g;
}

ad::Bindings constants(ad::Tape& t, const ad::ParameterStore& store, const std::string& live = {},
                       ad::Var v = {}) {
  ad::Bindings b;
  for (const auto& [name, a] : store.arrays()) {
    b.set(name, name == live ? v : t.constant(ad::Tensor(a.shape, a.value)));
  }
  return b;
}

using LayerFn = std::function<ad::Var(ad::Tape&, const ad::Bindings&, ad::Var)>;

struct NamedLayer {
  std::string name;
  LayerFn fn;
  ad::ParameterStore params;
  ad::Tensor input;
};

// One instance of every layer type with random (nonzero) parameters.
std::vector<NamedLayer> layer_suite(std::uint64_t seed, std::size_t tokens, std::size_t c, std::size_t heads,
                                    std::size_t blocks) {
  std::vector<NamedLayer> out;
  layers::Rng rng(seed);
  std::mt19937_64 xr(seed + 1);
  auto x = random_features(tokens, c, xr);

  {
    NamedLayer l{"equi_linear", {}, {}, x};
    auto lin = std::make_shared<layers::EquiLinear>("lin", c, c);
    lin->declare(l.params, rng);
    for (auto& b : l.params.at("lin.bias").value) b = 0.3;
    l.fn = [lin](ad::Tape& t, const ad::Bindings& p, ad::Var v) { return (*lin)(t, p, v); };
    out.push_back(std::move(l));
  }
  out.push_back({"equi_layernorm", [](ad::Tape& t, const ad::Bindings&, ad::Var v) { return layers::equi_layernorm(t, v); },
                 {}, x});
  out.push_back({"gated_gelu", [](ad::Tape& t, const ad::Bindings&, ad::Var v) { return layers::gated_gelu(t, v); }, {}, x});
  {
    NamedLayer l{"geometric_mlp", {}, {}, x};
    auto mlp = std::make_shared<layers::GeometricMlp>("mlp", c, c, 2 * c);
    mlp->declare(l.params, rng, layers::Init::kRandom);
    l.fn = [mlp](ad::Tape& t, const ad::Bindings& p, ad::Var v) { return (*mlp)(t, p, v); };
    out.push_back(std::move(l));
  }
  {
    NamedLayer l{"attention", {}, {}, x};
    auto attn = std::make_shared<layers::GeometricAttention>("attn", layers::AttentionConfig{c, heads});
    attn->declare(l.params, rng, layers::Init::kRandom);
    l.fn = [attn](ad::Tape& t, const ad::Bindings& p, ad::Var v) { return (*attn)(t, p, v); };
    out.push_back(std::move(l));
  }
  {
    NamedLayer l{"transformer_blocks_x" + std::to_string(blocks), {}, {}, x};
    auto stack = std::make_shared<std::vector<layers::TransformerBlock>>();
    for (std::size_t i = 0; i < blocks; ++i) {
      stack->emplace_back("b" + std::to_string(i), layers::AttentionConfig{c, heads});
      stack->back().declare(l.params, rng, layers::Init::kRandom);
    }
    l.fn = [stack](ad::Tape& t, const ad::Bindings& p, ad::Var v) {
      for (const auto& b : *stack) v = b(t, p, v);
      return v;
    };
    out.push_back(std::move(l));
  }
  {
    // Interpolated and skip features stacked along channels.
    NamedLayer l{"interpolation_mlp", {}, {}, random_features(tokens, 2 * c, xr)};
    auto mlp = std::make_shared<layers::InterpolationMlp>("interp", c, c, c);
    mlp->declare(l.params, rng);
    l.fn = [mlp, c](ad::Tape& t, const ad::Bindings& p, ad::Var v) {
      return (*mlp)(t, p, ad::slice(t, v, 1, 0, c), ad::slice(t, v, 1, c, c));
    };
    out.push_back(std::move(l));
  }
  return out;
}

ad::Tensor evaluate(const NamedLayer& l, const ad::Tensor& x) {
  ad::Tape t;
  return t.value(l.fn(t, constants(t, l.params), t.constant(x)));
}

// Pooling acts on features and relative translations of moving positions.
double pooling_equivariance(std::uint64_t seed, std::size_t tokens, std::size_t c, std::size_t motions) {
  layers::Rng rng(seed);
  std::mt19937_64 xr(seed + 2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Vec3> pos(4 * tokens);
  for (auto& p : pos) p = {u(xr), u(xr), u(xr)};
  const auto plan = tokenizer::build_plan(pos, {0.25, 3, seed});
  const auto rel = layers::relative_translations(pos, plan.coarse_indices, plan.assignment);
  const auto x = random_features(pos.size(), c, xr);
  ad::ParameterStore store;
  layers::PoolingMlp pool("pool", c, c);
  pool.declare(store, rng);
  auto run = [&](const ad::Tensor& feats, const ad::Tensor& r) {
    ad::Tape t;
    auto y = pool(t, constants(t, store), t.constant(feats), t.constant(r));
    return t.value(ad::scatter_mean(t, y, plan.assignment, plan.n_coarse()));
  };
  const auto y = run(x, rel);
  double worst = 0.0;
  for (std::size_t i = 0; i < motions; ++i) {
    const auto g = motion(seed, i);
    std::vector<Vec3> moved(pos.size());
    for (std::size_t v = 0; v < pos.size(); ++v) moved[v] = pga::apply_to_point(g, pos[v]);
    const auto rel2 = layers::relative_translations(moved, plan.coarse_indices, plan.assignment);
    worst = std::max(worst, relative_deviation(run(layers::transform_features(x, g), rel2),
                                               layers::transform_features(y, g)));
  }
  return worst;
}

}  // namespace

Check algebra(std::uint64_t seed, std::size_t pairs) {
  const auto t0 = Clock::now();
  const auto& table = pga::cayley_table();
  std::size_t mismatches = 0;
  for (std::size_t a = 0; a < pga::kNumBlades; ++a) {
    for (std::size_t b = 0; b < pga::kNumBlades; ++b) {
      const auto [blade, sign] = mask_product(a, b);
      if (table[a][b].sign != sign || (sign != 0 && table[a][b].blade != blade)) ++mismatches;
      for (std::size_t c = 0; c < pga::kNumBlades; ++c) {
        const auto A = Multivector::basis(a), B = Multivector::basis(b), C = Multivector::basis(c);
        if (!(pga::geometric_product(pga::geometric_product(A, B), C) ==
              pga::geometric_product(A, pga::geometric_product(B, C)))) {
          ++mismatches;
        }
      }
    }
  }
  // e0 e0 = 0, ei ei = 1, ei ej = -ej ei.
  using namespace pga::blade;
  if (table[kE0][kE0].sign != 0) ++mismatches;
  for (auto i : {kE1, kE2, kE3}) {
    if (table[i][i].sign != 1 || table[i][i].blade != kScalar) ++mismatches;
  }
  for (std::size_t i = kE0; i <= kE3; ++i) {
    for (std::size_t j = kE0; j <= kE3; ++j) {
      if (i != j && (table[i][j].sign != -table[j][i].sign || table[i][j].blade != table[j][i].blade)) ++mismatches;
    }
  }
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (std::size_t n = 0; n < pairs; ++n) {
    const auto a = random_mv(rng), b = random_mv(rng);
    Multivector want;
    double scale = 0.0;
    for (std::size_t i = 0; i < pga::kNumBlades; ++i) {
      for (std::size_t j = 0; j < pga::kNumBlades; ++j) {
        const auto [k, s] = mask_product(i, j);
        if (s != 0) want[k] += s * a[i] * b[j];
        scale = std::max(scale, std::abs(a[i] * b[j]));
      }
    }
    const auto got = pga::geometric_product(a, b);
    for (std::size_t i = 0; i < pga::kNumBlades; ++i) worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  auto c = finish("algebra", worst, 1e-14, t0,
                  "table mismatches " + std::to_string(mismatches) + ", " + std::to_string(pairs) + " random products");
  c.passed = c.passed && mismatches == 0;
  return c;
}

Check embeddings(std::uint64_t seed, std::size_t trials) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  double point = 0.0, shift = 0.0;
  for (std::size_t n = 0; n < trials; ++n) {
    const Vec3 p{u(rng), u(rng), u(rng)}, tau{u(rng), u(rng), u(rng)};
    const auto back = pga::extract_point(pga::embed(pga::Point{p}));
    const auto moved = pga::apply_to_point(pga::Versor::translator(tau), p);
    for (int i = 0; i < 3; ++i) {
      point = std::max(point, std::abs(back[i] - p[i]) / (1.0 + std::abs(p[i])));
      shift = std::max(shift, std::abs(moved[i] - (p[i] + tau[i])) / (1.0 + std::abs(p[i] + tau[i])));
    }
  }
  auto c = finish("embeddings", std::max(point / 1e-12, shift / 1e-10), 1.0, t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "error over tolerance; point roundtrip %.3g (< 1e-12), translator %.3g (< 1e-10)", point, shift);
  c.detail = buf;
  return c;
}

Check convex_combinations(std::uint64_t seed, std::size_t trials) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-100.0, 100.0), w123(1e-3, 10.0), u01(1e-3, 1.0);
  std::uniform_int_distribution<int> count(1, 6);
  double worst = 0.0;
  std::size_t bad_certificates = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const int m = count(rng);
    std::vector<Vec3> pts(m);
    std::vector<double> omega(m), scale(m);
    double wsum = 0.0;
    Multivector mix;
    for (int i = 0; i < m; ++i) {
      pts[i] = {coord(rng), coord(rng), coord(rng)};
      scale[i] = w123(rng);
      omega[i] = u01(rng);
      wsum += omega[i];
    }
    for (int i = 0; i < m; ++i) mix += pga::embed(pga::Point{pts[i]}) * (scale[i] * omega[i] / wsum);
    const auto got = pga::extract_point(mix);
    double denom = 0.0;
    for (int i = 0; i < m; ++i) denom += omega[i] * scale[i];
    Vec3 want{0, 0, 0};
    double certificate = 0.0;
    for (int i = 0; i < m; ++i) {
      const double wp = omega[i] * scale[i] / denom;
      if (!(wp > 0.0)) ++bad_certificates;
      certificate += wp;
      for (int k = 0; k < 3; ++k) want[k] += wp * pts[i][k];
    }
    if (std::abs(certificate - 1.0) > 1e-12) ++bad_certificates;
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(got[k] - want[k]) / (1.0 + std::abs(want[k])));
  }
  auto c = finish("convex_combinations", worst, 1e-10, t0,
                  std::to_string(trials) + " trials, bad certificates " + std::to_string(bad_certificates));
  c.passed = c.passed && bad_certificates == 0;
  return c;
}

Check layer_equivariance(const EquivarianceOptions& o) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_layer;
  for (const auto& l : layer_suite(o.seed, o.tokens, o.channels, o.heads, o.blocks)) {
    const auto y = evaluate(l, l.input);
    for (std::size_t i = 0; i < o.motions; ++i) {
      const auto g = motion(o.seed, i);
      const double d =
          relative_deviation(evaluate(l, layers::transform_features(l.input, g)), layers::transform_features(y, g));
      if (d > worst) {
        worst = d;
        worst_layer = l.name;
      }
    }
  }
  const double pool = pooling_equivariance(o.seed, o.tokens, o.channels, o.motions);
  if (pool > worst) {
    worst = pool;
    worst_layer = "pooling_mlp";
  }
  return finish("layer_equivariance", worst, 1e-7, t0,
                std::to_string(o.motions) + " motions, worst " + worst_layer);
}

Check model_equivariance(const EquivarianceOptions& o) {
  const auto t0 = Clock::now();
  model::ModelConfig cfg;
  cfg.channels = o.channels;
  cfg.heads = o.heads;
  cfg.blocks = o.blocks;
  cfg.ratio = 0.25;
  cfg.k = 3;
  cfg.schema = {{mesh::Role::kPoint, "position"}, {mesh::Role::kPlane, "normal"}, {mesh::Role::kScalar, "s"}};
  cfg.seed = o.seed;
  const model::Model m(cfg);
  auto params = m.init();
  std::mt19937_64 rng(o.seed + 3);
  std::uniform_real_distribution<double> u(-0.5, 0.5), pos(-2.0, 2.0);
  for (auto& [name, a] : params.arrays()) {
    for (auto& x : a.value) x += u(rng);
  }
  mesh::MeshSample s;
  const std::size_t n = 4 * o.tokens;
  for (std::size_t v = 0; v < n; ++v) s.positions.push_back({pos(rng), pos(rng), pos(rng)});
  std::vector<double> normal, scalar;
  for (std::size_t v = 0; v < n; ++v) {
    Vec3 d{u(rng), u(rng), u(rng) + 1.0};
    const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    for (auto x : d) normal.push_back(x / len);
    scalar.push_back(u(rng));
  }
  s.set_attribute("normal", 3, normal);
  s.set_attribute("s", 1, scalar);
  const auto prepared = m.prepare(s, o.seed);
  const auto y = m.predict(params, prepared);
  double worst = 0.0;
  for (std::size_t i = 0; i < o.motions; ++i) {
    const auto g = motion(o.seed, i);
    auto moved = m.prepare(mesh::transform(s, g), o.seed);
    moved.features = layers::transform_features(prepared.features, g);
    const auto y2 = m.predict(params, moved);
    ad::Tensor gy = y;
    for (std::size_t v = 0; v < n; ++v) {
      const auto d = pga::apply_to_direction(g, {y.data[3 * v], y.data[3 * v + 1], y.data[3 * v + 2]});
      std::copy(d.begin(), d.end(), gy.data.begin() + static_cast<std::ptrdiff_t>(3 * v));
    }
    worst = std::max(worst, relative_deviation(y2, gy));
  }
  return finish("model_equivariance", worst, 1e-5, t0,
                std::to_string(o.blocks) + " blocks, " + std::to_string(o.motions) + " motions");
}

Check layer_gradients(std::uint64_t seed) {
  const auto t0 = Clock::now();
  double worst = 0.0, worst_component = 0.0;
  std::string worst_name;
  auto record = [&](const std::string& name, const ad::GradCheckResult& r) {
    worst_component = std::max(worst_component, r.max_rel_error);
    if (r.normwise_error > worst) {
      worst = r.normwise_error;
      worst_name = name;
    }
  };
  for (const auto& l : layer_suite(seed, 5, 4, 2, 2)) {
    // Contract with fixed weights so every output component contributes.
    std::mt19937_64 wr(seed + 77);
    const auto shape = evaluate(l, l.input).shape;
    const auto w = random_features(shape[0], shape[1], wr);
    auto readout = [&](ad::Tape& t, ad::Var y) { return ad::sum(t, ad::mul(t, y, t.constant(w))); };
    record(l.name + ":input", ad::grad_check(
                                  [&](ad::Tape& t, ad::Var v) { return readout(t, l.fn(t, constants(t, l.params), v)); },
                                  l.input));
    for (const auto& [name, a] : l.params.arrays()) {
      record(l.name + ":" + name,
             ad::grad_check(
                 [&, name = name](ad::Tape& t, ad::Var v) {
                   return readout(t, l.fn(t, constants(t, l.params, name, v), t.constant(l.input)));
                 },
                 ad::Tensor(a.shape, a.value)));
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "worst %s, component-wise %.3g", worst_name.c_str(), worst_component);
  return finish("layer_gradients", worst, 1e-4, t0, buf);
}

Check model_gradients(std::uint64_t seed, std::size_t points) {
  const auto t0 = Clock::now();
  model::ModelConfig cfg;
  cfg.channels = 4;
  cfg.heads = 2;
  cfg.blocks = 2;
  cfg.ratio = 0.2;
  cfg.k = 3;
  cfg.schema = {{mesh::Role::kPoint, "position"}, {mesh::Role::kScalar, "s"}};
  const model::Model m(cfg);
  double worst = 0.0, worst_component = 0.0;
  for (std::size_t p = 0; p < points; ++p) {
    std::mt19937_64 rng(seed * 7919 + p);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(-2.0, 2.0);
    mesh::MeshSample s;
    for (int v = 0; v < 20; ++v) s.positions.push_back({pos(rng), pos(rng), pos(rng)});
    std::vector<double> sc(20), target(60);
    for (auto& x : sc) x = u(rng);
    for (auto& x : target) x = u(rng);
    s.set_attribute("s", 1, sc);
    s.target_kind = mesh::TargetKind::kVertex;
    s.target_dim = 3;
    s.target = target;
    auto prepared = m.prepare(s, seed + p);
    prepared.features = random_features(20, cfg.schema.size(), rng);
    auto params = m.init();
    for (auto& [name, a] : params.arrays()) {
      for (auto& x : a.value) x += u(rng);
    }
    for (const auto& [name, a] : params.arrays()) {
      const auto r = ad::grad_check(
          [&, name = name](ad::Tape& t, ad::Var v) {
            return m.loss(t, m.forward(t, constants(t, params, name, v), prepared), prepared);
          },
          ad::Tensor(a.shape, a.value));
      worst = std::max(worst, r.normwise_error);
      worst_component = std::max(worst_component, r.max_rel_error);
    }
    const auto r = ad::grad_check(
        [&](ad::Tape& t, ad::Var v) {
          return m.loss(t, m.forward(t, constants(t, params), v, t.constant(prepared.translations), prepared.plan),
                        prepared);
        },
        prepared.features);
    worst = std::max(worst, r.normwise_error);
    worst_component = std::max(worst_component, r.max_rel_error);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu points, component-wise %.3g", points, worst_component);
  return finish("model_gradients", worst, 1e-4, t0, buf);
}

std::string format(const Check& c) {
  char buf[512];
  if (c.threshold > 0.0) {
    std::snprintf(buf, sizeof buf, "%s %s %.3e < %.1e (%.2fs) %s", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.value, c.threshold, c.seconds, c.detail.c_str());
  } else {
    std::snprintf(buf, sizeof buf, "%s %s %.3e == 0 (%.2fs) %s", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                  c.seconds, c.detail.c_str());
  }
  return buf;
}

}  // namespace labgatr::verify
