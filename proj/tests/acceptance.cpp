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

// Acceptance suite: one PASS/FAIL line per criterion, exit code 0 iff all pass.
//
//   acceptance [--only name[,name...]] [--out dir] [--cli path/to/labgatr]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "labgatr/dataset.hpp"
#include "labgatr/model.hpp"
#include "labgatr/pga.hpp"
#include "labgatr/tokenizer.hpp"
#include "labgatr/verify.hpp"
#include "oracles.hpp"
#include "tokenizer_oracles.hpp"

namespace {

namespace fs = std::filesystem;
using namespace labgatr;
using pga::Multivector;
using pga::Vec3;

// Pinned tolerances and budgets.
constexpr double kProductTol = 1e-14;
constexpr double kAlgebraSeconds = 10.0;
constexpr double kPointRoundtripTol = 1e-12;
constexpr double kTranslatorTol = 1e-10;
constexpr double kConvexTol = 1e-10;
constexpr double kConvexSeconds = 5.0;
constexpr double kCertificateTol = 1e-12;
constexpr double kLayerEquivarianceTol = 1e-7;
constexpr double kModelEquivarianceTol = 1e-5;
constexpr double kMotionOracleTol = 1e-12;
constexpr double kEquivarianceSeconds = 120.0;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientSeconds = 300.0;
constexpr double kWeightSumTol = 1e-12;
constexpr double kRotatedWeightTol = 1e-12;
constexpr double kDeskValEps = 15.0;    // percent
constexpr double kOverfitEps = 2.0;     // percent
constexpr double kDeskSeconds = 1800.0;
constexpr double kCompressionFactor = 1.5;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string summary;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// ---------------------------------------------------------------------------

Outcome algebra_exactness() {
  const auto t0 = Clock::now();
  using testing_oracles::oracle_blade_product;
  std::size_t table_errors = 0, assoc_errors = 0, axiom_errors = 0;
  const auto& table = pga::cayley_table();
  for (std::size_t a = 0; a < 16; ++a) {
    for (std::size_t b = 0; b < 16; ++b) {
      const auto [k, s] = oracle_blade_product(a, b);
      if (table[a][b].sign != s || (s != 0 && table[a][b].blade != k)) ++table_errors;
    }
  }
  for (std::size_t a = 0; a < 16; ++a) {
    for (std::size_t b = 0; b < 16; ++b) {
      for (std::size_t c = 0; c < 16; ++c) {
        const auto A = Multivector::basis(a), B = Multivector::basis(b), C = Multivector::basis(c);
        if (!(pga::geometric_product(pga::geometric_product(A, B), C) ==
              pga::geometric_product(A, pga::geometric_product(B, C)))) {
          ++assoc_errors;
        }
      }
    }
  }
  // e0^2 = 0, ei^2 = 1, and generators anticommute.
  using namespace pga::blade;
  const std::size_t gens[] = {kE0, kE1, kE2, kE3};
  for (auto i : gens) {
    const auto sq = pga::geometric_product(Multivector::basis(i), Multivector::basis(i));
    if (!(sq == (i == kE0 ? Multivector{} : Multivector::scalar(1.0)))) ++axiom_errors;
    for (auto j : gens) {
      if (i == j) continue;
      const auto ij = pga::geometric_product(Multivector::basis(i), Multivector::basis(j));
      const auto ji = pga::geometric_product(Multivector::basis(j), Multivector::basis(i));
      if (!(ij == ji * -1.0)) ++axiom_errors;
    }
  }
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const auto x = testing_oracles::random_multivector(rng), y = testing_oracles::random_multivector(rng);
    const auto got = pga::geometric_product(x, y), want = testing_oracles::oracle_product(x, y);
    double scale = 0.0;
    for (std::size_t i = 0; i < 16; ++i) scale = std::max(scale, std::abs(want[i]));
    for (std::size_t i = 0; i < 16; ++i) worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
  }
  const double secs = seconds_since(t0);
  const bool ok = table_errors == 0 && assoc_errors == 0 && axiom_errors == 0 && worst < kProductTol &&
                  secs < kAlgebraSeconds;
  return {ok, fmt("table mismatches %zu, associativity failures %zu/4096, axiom failures %zu, "
                  "product vs sign-rule oracle %.2e (< %.0e) over 1000 pairs, %.2fs (< %.0fs)",
                  table_errors, assoc_errors, axiom_errors, worst, kProductTol, secs, kAlgebraSeconds)};
}

Outcome embedding_roundtrips() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1000.0, 1000.0);
  double point = 0.0, shift = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 p{u(rng), u(rng), u(rng)}, tau{u(rng), u(rng), u(rng)};
    const auto back = pga::extract_point(pga::embed(pga::Point{p}));
    const auto moved = pga::apply_to_point(pga::Versor::translator(tau), p);
    for (int i = 0; i < 3; ++i) {
      point = std::max(point, rel(back[i], p[i]));
      shift = std::max(shift, rel(moved[i], p[i] + tau[i]));
    }
  }
  return {point < kPointRoundtripTol && shift < kTranslatorTol,
          fmt("point embed/extract %.2e (< %.0e), translator vs vector addition %.2e (< %.0e) over 1000 draws",
              point, kPointRoundtripTol, shift, kTranslatorTol)};
}

Outcome convex_combinations() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-50.0, 50.0), u01(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 6);
  double worst = 0.0, worst_cert = 0.0;
  std::size_t outside = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = count(rng);
    std::vector<Vec3> x(m);
    std::vector<double> w123(m), omega(m);
    for (int i = 0; i < m; ++i) {
      x[i] = {coord(rng), coord(rng), coord(rng)};
      w123[i] = 10.0 * (1.0 - u01(rng));  // (0, 10]
      omega[i] = 1.0 - u01(rng);
    }
    double osum = 0.0;
    for (double o : omega) osum += o;
    // Convex combination of points whose homogeneous coordinate is w123.
    Multivector mix;
    for (int i = 0; i < m; ++i) mix += pga::embed(pga::Point{x[i]}) * (w123[i] * omega[i] / osum);
    const auto got = pga::extract_point(mix);
    double den = 0.0;
    for (int i = 0; i < m; ++i) den += omega[i] * w123[i];
    Vec3 want{0, 0, 0};
    double cert = 0.0;
    for (int i = 0; i < m; ++i) {
      const double wp = omega[i] * w123[i] / den;
      if (wp < 0.0) ++outside;
      cert += wp;
      for (int k = 0; k < 3; ++k) want[k] += wp * x[i][k];
    }
    worst_cert = std::max(worst_cert, std::abs(cert - 1.0));
    for (int k = 0; k < 3; ++k) worst = std::max(worst, rel(got[k], want[k]));
  }
  const double secs = seconds_since(t0);
  return {worst < kConvexTol && worst_cert < kCertificateTol && outside == 0 && secs < kConvexSeconds,
          fmt("extracted vs reweighted combination %.2e (< %.0e), certificate |sum-1| %.2e, negative weights %zu, "
              "%.2fs (< %.0fs)",
              worst, kConvexTol, worst_cert, outside, secs, kConvexSeconds)};
}

// Versor actions against Rodrigues rotation, mirror reflection and vector
// addition, composed in both orders.
double motion_oracle_error() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 axis{n(rng), n(rng), n(rng)}, tau{n(rng), n(rng), n(rng)}, normal{n(rng), n(rng), n(rng)};
    const double a = angle(rng), d = n(rng);
    const auto g = pga::Versor::reflection(normal, d)
                       .compose(pga::Versor::translator(tau))
                       .compose(pga::Versor::rotor(axis, a));
    for (int k = 0; k < 5; ++k) {
      const Vec3 p{5 * n(rng), 5 * n(rng), 5 * n(rng)};
      Vec3 want = testing_oracles::rotate(axis, a, p);
      for (int i = 0; i < 3; ++i) want[i] += tau[i];
      want = testing_oracles::reflect(normal, d, want);
      const auto got = pga::apply_to_point(g, p);
      for (int i = 0; i < 3; ++i) worst = std::max(worst, rel(got[i], want[i]));
    }
  }
  return worst;
}

Outcome equivariance() {
  const auto t0 = Clock::now();
  verify::EquivarianceOptions o;
  o.blocks = 4;
  o.motions = 20;
  o.seed = 31;
  const auto layers = verify::layer_equivariance(o);
  const auto model = verify::model_equivariance(o);
  const double motion = motion_oracle_error();
  const double secs = seconds_since(t0);
  return {layers.value < kLayerEquivarianceTol && model.value < kModelEquivarianceTol &&
              motion < kMotionOracleTol && secs < kEquivarianceSeconds,
          fmt("layers %.2e (< %.0e, %s), 4-block model %.2e (< %.0e), 20 motions incl. reflections, "
              "versor vs rotation/mirror oracle %.2e, %.1fs (< %.0fs)",
              layers.value, kLayerEquivarianceTol, layers.detail.c_str(), model.value, kModelEquivarianceTol, motion,
              secs, kEquivarianceSeconds)};
}

Outcome gradients() {
  const auto t0 = Clock::now();
  const auto layers = verify::layer_gradients(41);
  const auto model = verify::model_gradients(43, 5);
  const double secs = seconds_since(t0);
  return {layers.value < kGradientTol && model.value < kGradientTol && secs < kGradientSeconds,
          fmt("normwise relative error: layers %.2e (%s), end-to-end L1 at 5 points %.2e (%s); < %.0e at "
              "eps_fd 1e-5, %.1fs (< %.0fs)",
              layers.value, layers.detail.c_str(), model.value, model.detail.c_str(), kGradientTol, secs,
              kGradientSeconds)};
}

Outcome tokenisation() {
  using namespace testing_oracles;
  std::mt19937_64 rng(97);
  std::uniform_int_distribution<std::size_t> size(200, 5000);
  const double ratios[] = {0.1, 0.05, 0.02};
  std::size_t assign_mismatch = 0, knn_mismatch = 0, translate_mismatch = 0, rotate_index_mismatch = 0;
  double weight_sum = 0.0, weight_oracle = 0.0, rotated_weights = 0.0;
  for (std::uint64_t c = 0; c < 50; ++c) {
    const std::size_t n = size(rng);
    tokenizer::PlanOptions opt;
    opt.ratio = ratios[c % 3];
    opt.k = c % 2 ? 4 : 3;
    opt.seed = c;
    // Random, tie-heavy lattice and exactly translatable dyadic clouds in turn.
    const auto pts = c % 3 == 0 ? random_cloud(n, c) : c % 3 == 1 ? lattice_cloud(n, c) : dyadic_cloud(n, c);
    const auto plan = tokenizer::build_plan(pts, opt);
    plan.validate();
    if (plan.assignment != oracle_assign(pts, plan.coarse_indices)) ++assign_mismatch;
    std::vector<Vec3> coarse;
    for (auto i : plan.coarse_indices) coarse.push_back(pts[i]);
    const auto knn = oracle_knn(pts, coarse, opt.k);
    for (std::size_t v = 0; v < n; ++v) {
      double s = 0.0, lsum = 0.0;
      std::vector<double> lambda(opt.k);
      for (std::size_t j = 0; j < opt.k; ++j) {
        s += plan.interp.weights[v * opt.k + j];
        lambda[j] = 1.0 / (sq(pts[v], coarse[plan.interp.neighbors[v * opt.k + j]]) + plan.epsilon);
        lsum += lambda[j];
      }
      for (std::size_t j = 0; j < opt.k; ++j) {
        weight_oracle = std::max(weight_oracle, std::abs(plan.interp.weights[v * opt.k + j] - lambda[j] / lsum));
      }
      weight_sum = std::max(weight_sum, std::abs(s - 1.0));
      // Distance ties may order neighbours differently only at equal distance.
      for (std::size_t j = 0; j < opt.k; ++j) {
        if (sq(pts[v], coarse[plan.interp.neighbors[v * opt.k + j]]) != sq(pts[v], coarse[knn[v * opt.k + j]])) {
          ++knn_mismatch;
        }
      }
    }
    // Translation by dyadic offsets is exact on the dyadic cloud.
    const auto dy = dyadic_cloud(n, c + 1000);
    const auto dplan = tokenizer::build_plan(dy, opt);
    auto shifted = dy;
    for (auto& p : shifted) {
      p[0] += 5.0;
      p[1] -= 12.5;
      p[2] += 0.25;
    }
    if (!(tokenizer::build_plan(shifted, opt) == dplan)) ++translate_mismatch;
    // Orthogonal transforms, reflections included, on a generic cloud.
    const auto rc = random_cloud(n, c + 2000);
    const auto rplan = tokenizer::build_plan(rc, opt);
    const auto g = pga::random_rigid_motion(c + 3000, true)
                       .compose(pga::Versor::reflection({0.3, -1.0, 0.7}, 0.0));
    std::vector<Vec3> moved;
    for (const auto& p : rc) moved.push_back(pga::apply_to_point(g, p));
    const auto mplan = tokenizer::build_plan(moved, opt);
    if (mplan.coarse_indices != rplan.coarse_indices || mplan.assignment != rplan.assignment ||
        mplan.interp.neighbors != rplan.interp.neighbors) {
      ++rotate_index_mismatch;
    }
    for (std::size_t i = 0; i < rplan.interp.weights.size(); ++i) {
      rotated_weights = std::max(rotated_weights, std::abs(mplan.interp.weights[i] - rplan.interp.weights[i]));
    }
  }
  const bool ok = assign_mismatch == 0 && knn_mismatch == 0 && weight_sum < kWeightSumTol &&
                  weight_oracle < kWeightSumTol && translate_mismatch == 0 && rotate_index_mismatch == 0 &&
                  rotated_weights < kRotatedWeightTol;
  return {ok, fmt("50 clouds (n <= 5000): assignment vs brute force mismatches %zu, kNN mismatches %zu, "
                  "|sum w - 1| %.1e and weights vs oracle %.1e (< %.0e), translated plans differing %zu, "
                  "orthogonally moved plans: index mismatches %zu, weights %.1e (< %.0e)",
                  assign_mismatch, knn_mismatch, weight_sum, weight_oracle, kWeightSumTol, translate_mismatch,
                  rotate_index_mismatch, rotated_weights, kRotatedWeightTol)};
}

// ---------------------------------------------------------------------------

std::vector<model::PreparedSample> prepare(const model::Model& m, const std::vector<mesh::MeshSample>& s) {
  std::vector<model::PreparedSample> out;
  for (const auto& x : s) out.push_back(m.prepare(x, 0));
  return out;
}

double mean_eps(const model::Model& m, const autodiff::ParameterStore& p,
                const std::vector<model::PreparedSample>& set) {
  double sum = 0.0;
  for (const auto& s : set) sum += model::metric_eps(m.predict(p, s).data, s.target.data);
  return sum / static_cast<double>(set.size());
}

void progress(const char* tag, const model::EpochRecord& r, std::size_t every) {
  if (r.epoch % every == 0) {
    std::fprintf(stderr, "  [%s] epoch %zu train %.5g val %.5g (%.0fs)\n", tag, r.epoch, r.train_loss, r.val_loss,
                 r.wall_seconds);
  }
}

Outcome desk_learning(const fs::path& out) {
  const auto t0 = Clock::now();
  const auto train_raw = data::make_toy_dataset(data::ToyKind::kVolume, 100, 0);
  const auto val_raw = data::make_toy_dataset(data::ToyKind::kVolume, 20, 0, 100);
  std::size_t max_vertices = 0;
  for (const auto& s : train_raw) max_vertices = std::max(max_vertices, s.num_vertices());

  const auto cfg = model::preset("volume-velocity");  // ratio 0.05, 200 epochs
  const model::Model m(cfg);
  const auto train_set = prepare(m, train_raw);
  const auto val_set = prepare(m, val_raw);
  auto params = m.init();
  model::TrainOptions opts;
  opts.out_dir = out / "desk";
  opts.on_epoch = [](const model::EpochRecord& r) { progress("desk", r, 10); };
  const auto res = model::train(m, params, train_set, val_set, opts);
  const double val_eps = mean_eps(m, res.best, val_set);

  // Single-sample overfit: 200 full-batch steps.
  auto ocfg = cfg;
  ocfg.lr = 3e-3;
  ocfg.batch_size = 1;
  const model::Model om(ocfg);
  const std::vector<model::PreparedSample> one = {train_set[0]};
  auto oparams = om.init();
  model::TrainOptions oopts;
  oopts.out_dir = out / "overfit";
  oopts.on_epoch = [](const model::EpochRecord& r) { progress("overfit", r, 50); };
  const auto ores = model::train(om, oparams, one, one, oopts);
  const double fit_eps = mean_eps(om, ores.best, one);
  const double l1_drop = ores.log.front().train_loss / ores.best_val;

  const double secs = seconds_since(t0);
  const bool ok = max_vertices <= 2000 && val_eps <= kDeskValEps && fit_eps <= kOverfitEps && secs < kDeskSeconds;
  return {ok, fmt("volume toy 100/20 (<= %zu vertices), ratio %.2f, %zu epochs: val eps %.2f%% (<= %.0f%%), "
                  "best epoch %zu; single-sample overfit eps %.2f%% (<= %.0f%%, L1 down %.0fx); %.0fs (< %.0fs)",
                  max_vertices, cfg.ratio, cfg.epochs, val_eps, kDeskValEps, res.best_epoch, fit_eps, kOverfitEps,
                  l1_drop, secs, kDeskSeconds)};
}

Outcome compression(const fs::path& out) {
  const auto train_raw = data::make_toy_dataset(data::ToyKind::kSurface, 20, 5);
  const auto val_raw = data::make_toy_dataset(data::ToyKind::kSurface, 10, 5, 20);
  double eps[2];
  const double ratios[2] = {0.1, 1.0};
  for (int i = 0; i < 2; ++i) {
    auto cfg = model::preset("surface-wss");
    cfg.ratio = ratios[i];
    cfg.epochs = 60;
    const model::Model m(cfg);
    const auto tr = prepare(m, train_raw);
    const auto va = prepare(m, val_raw);
    auto params = m.init();
    model::TrainOptions opts;
    opts.out_dir = out / (i == 0 ? "compression_0.1" : "compression_1.0");
    const char* tag = i == 0 ? "ratio 0.1" : "ratio 1.0";
    opts.on_epoch = [tag](const model::EpochRecord& r) { progress(tag, r, 20); };
    const auto res = model::train(m, params, tr, va, opts);
    eps[i] = mean_eps(m, res.best, va);
  }
  return {eps[0] <= kCompressionFactor * eps[1],
          fmt("surface toy 20/10, 60 epochs each: val eps %.2f%% at ratio 0.1 vs %.2f%% at ratio 1.0, "
              "quotient %.3f (<= %.1f)",
              eps[0], eps[1], eps[0] / eps[1], kCompressionFactor)};
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return std::make_pair(static_cast<bool>(is), ss.str());
  };
  const auto [oa, sa] = slurp(a);
  const auto [ob, sb] = slurp(b);
  return oa && ob && sa == sb;
}

Outcome determinism(const fs::path& out, const std::string& cli) {
  const char* files[] = {"log.csv", "best.ckpt", "best.ckpt.json", "final.ckpt", "model_config.json"};
  std::size_t differing = 0, compared = 0;
  auto cfg = model::preset("volume-velocity");
  cfg.epochs = 3;
  cfg.seed = 17;
  const auto train_raw = data::make_toy_dataset(data::ToyKind::kVolume, 6, 3);
  const auto val_raw = data::make_toy_dataset(data::ToyKind::kVolume, 2, 3, 6);
  for (const char* run : {"a", "b"}) {
    const model::Model m(cfg);
    auto params = m.init();
    model::TrainOptions opts;
    opts.serial = true;
    opts.out_dir = out / "determinism" / run;
    model::train(m, params, prepare(m, train_raw), prepare(m, val_raw), opts);
  }
  for (const char* f : files) {
    ++compared;
    differing += !same_bytes(out / "determinism/a" / f, out / "determinism/b" / f);
  }
  std::string via_cli = "CLI not given";
  if (!cli.empty()) {
    const auto cfg_path = out / "determinism" / "run.json";
    std::ofstream(cfg_path) << R"({"preset": "volume-velocity", "model": {"epochs": 3},
      "data": {"toy": {"kind": "volume", "train": 6, "val": 2, "seed": 3}}, "out_dir": "cli"})";
    int rc = 0;
    for (const char* run : {"cli_a", "cli_b"}) {
      const std::string cmd = "\"" + cli + "\" train --serial --seed 17 --config \"" + cfg_path.string() +
                              "\" --out \"" + (out / "determinism" / run).string() + "\" > /dev/null";
      rc |= std::system(cmd.c_str());
    }
    std::size_t cli_diff = rc != 0 ? 1 : 0;
    for (const char* f : files) {
      ++compared;
      cli_diff += !same_bytes(out / "determinism/cli_a" / f, out / "determinism/cli_b" / f);
    }
    differing += cli_diff;
    via_cli = rc == 0 ? "library and CLI --serial runs" : "CLI run failed";
  }
  return {differing == 0, fmt("%zu differing of %zu files compared (logs, checkpoints, sidecars; %s)", differing,
                              compared, via_cli.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  fs::path out = "acceptance_out";
  std::string cli;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string s; std::getline(ss, s, ',');) only.insert(s);
    } else if (a == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else if (a == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only name,...] [--out dir] [--cli path]\n";
      return 2;
    }
  }
  fs::create_directories(out);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"algebra", algebra_exactness},
      {"roundtrips", embedding_roundtrips},
      {"convex", convex_combinations},
      {"equivariance", equivariance},
      {"gradients", gradients},
      {"tokenisation", tokenisation},
      {"desk-learning", [&] { return desk_learning(out); }},
      {"compression", [&] { return compression(out); }},
      {"determinism", [&] { return determinism(out, cli); }},
  };
  int failed = 0, run = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++run;
    failed += !o.passed;
    std::printf("%s %-13s %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.summary.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", run - failed, run);
  return failed == 0 ? 0 : 1;
}
