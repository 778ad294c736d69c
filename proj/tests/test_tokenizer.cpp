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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "labgatr/tokenizer.hpp"
#include "tokenizer_oracles.hpp"

namespace labgatr::tokenizer {
namespace {

using namespace testing_oracles;

TEST(CoarseCount, RoundingAndBounds) {
  EXPECT_EQ(coarse_count(7000, ratio::kSurface), 700u);
  EXPECT_EQ(coarse_count(10, 0.01), 1u);
  EXPECT_EQ(coarse_count(5, 1.0), 5u);
  EXPECT_THROW(coarse_count(5, 0.0), std::invalid_argument);
  EXPECT_THROW(coarse_count(5, 1.5), std::invalid_argument);
}

TEST(Fps, CollinearEndpoints) {
  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.push_back({double(i), 0, 0});
  EXPECT_EQ(farthest_point_sampling_from(line, 2, 0), (std::vector<std::uint32_t>{0, 9}));
}

TEST(Fps, AllIndicesWhenFull) {
  const auto pts = random_cloud(30, 1);
  auto sel = farthest_point_sampling(pts, 30, 4);
  std::sort(sel.begin(), sel.end());
  std::vector<std::uint32_t> all(30);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(sel, all);
}

TEST(Fps, RangeErrors) {
  const auto pts = random_cloud(5, 1);
  EXPECT_THROW(farthest_point_sampling(pts, 0, 1), std::out_of_range);
  EXPECT_THROW(farthest_point_sampling(pts, 6, 1), std::out_of_range);
}

TEST(Fps, BeatsRandomSubsets) {
  const auto pts = random_cloud(200, 2);
  const auto sel = farthest_point_sampling(pts, 20, 3);
  const double fps_spread = min_pairwise_distance(pts, sel);
  std::mt19937_64 rng(4);
  std::vector<std::uint32_t> idx(200);
  std::iota(idx.begin(), idx.end(), 0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::uint32_t> sub(idx.begin(), idx.begin() + 20);
    EXPECT_GE(fps_spread, min_pairwise_distance(pts, sub));
  }
}

TEST(Fps, MatchesGreedyOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto pts = random_cloud(300, 10 + s);
    EXPECT_EQ(farthest_point_sampling_from(pts, 37, 5), oracle_fps(pts, 37, 5));
  }
}

TEST(Assign, LineExample) {
  const std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {9, 0, 0}, {10, 0, 0}};
  EXPECT_EQ(assign_clusters(pts, std::vector<std::uint32_t>{0, 3}),
            (std::vector<std::uint32_t>{0, 0, 1, 1}));
}

TEST(Assign, DuplicateCoarseRejected) {
  const auto pts = random_cloud(10, 1);
  EXPECT_THROW(assign_clusters(pts, std::vector<std::uint32_t>{1, 1}), std::invalid_argument);
  EXPECT_THROW(assign_clusters(pts, std::vector<std::uint32_t>{}), std::invalid_argument);
}

TEST(Assign, BruteForceOracleAndGridAgree) {
  std::mt19937_64 rng(5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 50 + rng() % 2000;
    auto pts = s % 3 == 0 ? lattice_cloud(n, s) : random_cloud(n, s);
    const auto coarse = farthest_point_sampling(pts, std::max<std::size_t>(1, n / 10), s);
    const auto want = oracle_assign(pts, coarse);
    EXPECT_EQ(assign_clusters(pts, coarse, KnnMethod::kBruteForce), want);
    EXPECT_EQ(assign_clusters(pts, coarse, KnnMethod::kGrid), want);
    for (std::size_t p = 0; p < coarse.size(); ++p) EXPECT_EQ(want[coarse[p]], p);
  }
}

TEST(MeanPool, SingletonsOppositesAndSerialOracle) {
  const std::vector<double> msg = {1, 2, 3, 4, 5, 6};
  EXPECT_EQ(mean_pool(msg, 2, std::vector<std::uint32_t>{0, 1, 2}, 3), msg);
  EXPECT_EQ(mean_pool(std::vector<double>{1, -2, -1, 2}, 2, std::vector<std::uint32_t>{0, 0}, 1),
            (std::vector<double>{0, 0}));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> m(500 * 16);
  for (auto& x : m) x = u(rng);
  std::vector<std::uint32_t> a(500);
  for (std::size_t i = 0; i < 500; ++i) a[i] = (i * 7919) % 37;
  EXPECT_EQ(mean_pool(m, 16, a, 37), oracle_mean_pool(m, 16, a, 37));
  a[0] = 37;
  EXPECT_THROW(mean_pool(m, 16, a, 37), std::invalid_argument);
  std::vector<std::uint32_t> gap(500, 0);
  EXPECT_THROW(mean_pool(m, 16, gap, 2), std::logic_error);
}

TEST(Interp, EquidistantAndCoincident) {
  const std::vector<Vec3> coarse = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}};
  const std::vector<Vec3> fine = {{0, 0, 0}, {1, 0, 0}};
  const auto t = interp_plan(fine, coarse, 3);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(t.weights[j], 1.0 / 3.0, 1e-15);
  // Second vertex sits on coarse point 0; the others are at squared distance 4 and 2.
  const double eps = kDefaultEpsilon;
  const double want = (1 / eps) / (1 / eps + 1 / (4 + eps) + 1 / (2 + eps));
  EXPECT_EQ(t.neighbors[3], 0u);
  EXPECT_NEAR(t.weights[3], want, 1e-15);
  EXPECT_THROW(interp_plan(fine, coarse, 4), std::invalid_argument);
  EXPECT_THROW(interp_plan(fine, coarse, 3, 0.0), std::invalid_argument);
}

TEST(Interp, UnitDistanceExample) {
  // v on p, k-1 others at distance 1.
  const std::vector<Vec3> coarse = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (std::size_t k : {3u, 4u}) {
    const auto t = interp_plan(std::vector<Vec3>{{0, 0, 0}}, coarse, k);
    const double e = kDefaultEpsilon;
    EXPECT_NEAR(t.weights[0], (1 / e) / ((1 / e) + (k - 1) / (1 + e)), 1e-15);
  }
}

TEST(Interp, WeightsSumToOneAndMatchOracle) {
  const auto coarse = random_cloud(300, 7);
  const auto fine = random_cloud(10000, 8);
  const auto t = interp_plan(fine, coarse, 4);
  const auto want = oracle_knn(fine, coarse, 4);
  EXPECT_EQ(t.neighbors, want);
  EXPECT_EQ(interp_plan(fine, coarse, 4, kDefaultEpsilon, KnnMethod::kGrid).neighbors, want);
  for (std::size_t v = 0; v < fine.size(); ++v) {
    double s = 0;
    for (std::size_t j = 0; j < 4; ++j) s += t.weights[v * 4 + j];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Interpolate, ConstantSimplexAndConvexHull) {
  const std::vector<Vec3> corners = {{0, 0, 0}, {3, 0, 0}, {0, 3, 0}};
  InterpTable eq;
  eq.k = 3;
  eq.neighbors = {0, 1, 2};
  eq.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<double> feats;
  for (const auto& c : corners) {
    const auto m = pga::embed(pga::Point{c});
    feats.insert(feats.end(), m.coeffs().begin(), m.coeffs().end());
  }
  const auto out = interpolate(feats, 16, eq);
  pga::Multivector mv;
  std::copy_n(out.begin(), 16, mv.coeffs().begin());
  const auto c = pga::extract_point(mv);
  EXPECT_NEAR(c[0], 1.0, 1e-12);
  EXPECT_NEAR(c[1], 1.0, 1e-12);
  EXPECT_NEAR(c[2], 0.0, 1e-12);

  std::vector<double> same(5 * 16, 0.25);
  const auto coarse = random_cloud(5, 1);
  const auto t = interp_plan(random_cloud(40, 2), coarse, 3);
  for (double v : interpolate(same, 16, t)) EXPECT_NEAR(v, 0.25, 1e-15);

  // Scaled point features: interpolated point is the reweighted combination.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.1, 10.0);
  std::vector<double> scales(5);
  std::vector<double> pf;
  for (std::size_t p = 0; p < 5; ++p) {
    scales[p] = w(rng);
    const auto m = pga::embed(pga::Point{coarse[p]}) * scales[p];
    pf.insert(pf.end(), m.coeffs().begin(), m.coeffs().end());
  }
  const auto res = interpolate(pf, 16, t);
  for (std::size_t v = 0; v < 40; ++v) {
    pga::Multivector m;
    std::copy_n(res.begin() + v * 16, 16, m.coeffs().begin());
    const auto got = pga::extract_point(m);
    double denom = 0;
    for (std::size_t j = 0; j < 3; ++j) denom += t.weights[v * 3 + j] * scales[t.neighbors[v * 3 + j]];
    Vec3 want{0, 0, 0};
    double cert = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      const auto p = t.neighbors[v * 3 + j];
      const double wp = t.weights[v * 3 + j] * scales[p] / denom;
      EXPECT_GE(wp, 0.0);
      cert += wp;
      for (int a = 0; a < 3; ++a) want[a] += wp * coarse[p][a];
    }
    EXPECT_NEAR(cert, 1.0, 1e-12);
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(got[a], want[a], 1e-10);
  }
}

TEST(Plan, TranslationExactAndRotationInvariant) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto pts = dyadic_cloud(800, s);
    PlanOptions opt;
    opt.seed = s;
    const auto plan = build_plan(pts, opt);
    plan.validate();
    std::vector<Vec3> shifted = pts;
    for (auto& p : shifted) {
      p[0] += 3.0;
      p[1] -= 17.0;
      p[2] += 5.0;
    }
    EXPECT_TRUE(build_plan(shifted, opt) == plan);

    const auto g = pga::random_rigid_motion(100 + s, true);
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(pga::apply_to_point(g, p));
    const auto rp = build_plan(moved, opt);
    EXPECT_EQ(rp.coarse_indices, plan.coarse_indices);
    EXPECT_EQ(rp.assignment, plan.assignment);
    EXPECT_EQ(rp.interp.neighbors, plan.interp.neighbors);
    for (std::size_t i = 0; i < plan.interp.weights.size(); ++i) {
      EXPECT_NEAR(rp.interp.weights[i], plan.interp.weights[i], 1e-12);
    }
  }
}

TEST(Plan, PartitionAndSerialization) {
  const auto pts = random_cloud(1200, 9);
  PlanOptions opt;
  opt.k = 4;
  opt.ratio = 0.05;
  const auto plan = build_plan(pts, opt);
  const auto sizes = plan.cluster_sizes();
  EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), pts.size());
  for (auto c : sizes) EXPECT_GT(c, 0u);
  EXPECT_EQ(plan.n_coarse(), 60u);

  EXPECT_TRUE(plan_from_json(plan_to_json(plan)) == plan);
  std::stringstream ss;
  write_plan_binary(ss, plan);
  EXPECT_TRUE(read_plan_binary(ss) == plan);

  auto bad = plan_to_json(plan);
  bad["assignment"][plan.coarse_indices[0]] = plan.n_coarse() - 1 == 0 ? 1 : plan.n_coarse() - 1;
  EXPECT_THROW(plan_from_json(bad), std::logic_error);
  std::stringstream junk("LGTX");
  EXPECT_THROW(read_plan_binary(junk), std::runtime_error);
}

TEST(Plan, RatioOneIsIdentityPath) {
  const auto pts = random_cloud(200, 10);
  PlanOptions opt;
  opt.ratio = 1.0;
  const auto plan = build_plan(pts, opt);
  std::vector<double> feats(200 * 16);
  for (std::size_t i = 0; i < feats.size(); ++i) feats[i] = std::sin(double(i));
  // Reorder rows into coarse order, interpolate back and compare with the input.
  std::vector<double> coarse_rows(feats.size());
  for (std::size_t p = 0; p < 200; ++p) {
    std::copy_n(feats.begin() + plan.coarse_indices[p] * 16, 16, coarse_rows.begin() + p * 16);
  }
  const auto back = interpolate(coarse_rows, 16, plan.interp);
  double worst = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) worst = std::max(worst, std::abs(back[i] - feats[i]));
  // Neighbour weights are at most eps / d_min^2 relative to the self weight.
  EXPECT_LT(worst, 1e-6);
  EXPECT_EQ(mean_pool(feats, 16, plan.assignment, 200).size(), feats.size());
}

}  // namespace
}  // namespace labgatr::tokenizer
