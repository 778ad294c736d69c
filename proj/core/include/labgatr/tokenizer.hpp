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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "labgatr/pga.hpp"

// Geometry-only tokenisation: farthest point sampling, nearest-coarse
// clustering, mean pooling and inverse-squared-distance k-NN interpolation.
namespace labgatr::tokenizer {

using pga::Vec3;

/// Sub-sampling ratios used for the three reference workloads.
namespace ratio {
inline constexpr double kSurface = 0.1;
inline constexpr double kVolume = 0.01;
inline constexpr double kCortical = 0.024;
}  // namespace ratio

inline constexpr double kDefaultEpsilon = 1e-8;

/// Above this many fine vertices k-NN queries use the uniform grid.
inline constexpr std::size_t kGridThreshold = 50000;

enum class KnnMethod { kAuto, kBruteForce, kGrid };

/// max(1, round(ratio * n)). Throws std::invalid_argument unless 0 < ratio <= 1.
std::size_t coarse_count(std::size_t n, double ratio);

/// Start vertex drawn uniformly from [0, n) with a seeded generator.
std::uint32_t fps_start_index(std::size_t n, std::uint64_t seed);

/// Greedy max-min sampling from `start`: each step adds the vertex with the
/// largest distance to the selected set (ties: smallest vertex index).
/// Throws std::out_of_range unless 1 <= n_coarse <= n.
std::vector<std::uint32_t> farthest_point_sampling_from(std::span<const Vec3> positions,
                                                        std::size_t n_coarse,
                                                        std::uint32_t start);

std::vector<std::uint32_t> farthest_point_sampling(std::span<const Vec3> positions,
                                                   std::size_t n_coarse, std::uint64_t seed);

/// Position in `coarse_indices` of the nearest coarse vertex of every fine
/// vertex (ties: smallest position). Throws std::invalid_argument on an empty
/// or duplicated coarse set.
std::vector<std::uint32_t> assign_clusters(std::span<const Vec3> positions,
                                           std::span<const std::uint32_t> coarse_indices,
                                           KnnMethod method = KnnMethod::kAuto);

struct InterpTable {
  std::size_t k = 0;
  std::vector<std::uint32_t> neighbors;  // fine x k, positions in the coarse set
  std::vector<double> weights;           // fine x k, rows sum to 1
};

/// Exact k nearest coarse points of every fine point (ties: smallest index)
/// with weights lambda / sum(lambda), lambda = 1 / (|p - v|^2 + epsilon).
/// Throws std::invalid_argument if k > coarse size, k == 0 or epsilon <= 0.
InterpTable interp_plan(std::span<const Vec3> fine, std::span<const Vec3> coarse, std::size_t k,
                        double epsilon = kDefaultEpsilon, KnnMethod method = KnnMethod::kAuto);

/// Per-cluster arithmetic mean of `row_width`-wide rows, summed in fine-index
/// order. Throws std::logic_error on an empty cluster.
std::vector<double> mean_pool(std::span<const double> messages, std::size_t row_width,
                              std::span<const std::uint32_t> assignment, std::size_t n_coarse);

/// Convex combination of coarse rows for every fine vertex.
std::vector<double> interpolate(std::span<const double> coarse_features, std::size_t row_width,
                                const InterpTable& table);

struct TokenizationPlan {
  std::size_t num_fine = 0;
  std::uint32_t fps_start = 0;
  double epsilon = kDefaultEpsilon;
  std::vector<std::uint32_t> coarse_indices;
  std::vector<std::uint32_t> assignment;
  InterpTable interp;

  std::size_t n_coarse() const { return coarse_indices.size(); }
  std::vector<std::size_t> cluster_sizes() const;

  /// Throws std::logic_error if any structural invariant is violated.
  void validate() const;

  friend bool operator==(const TokenizationPlan& a, const TokenizationPlan& b);
};

bool operator==(const InterpTable& a, const InterpTable& b);

struct PlanOptions {
  double ratio = ratio::kSurface;
  std::size_t k = 3;
  std::uint64_t seed = 0;
  double epsilon = kDefaultEpsilon;
  KnnMethod method = KnnMethod::kAuto;
};

TokenizationPlan build_plan(std::span<const Vec3> positions, const PlanOptions& options);

std::vector<Vec3> gather_positions(std::span<const Vec3> positions,
                                   std::span<const std::uint32_t> indices);

// Serialization -------------------------------------------------------------

nlohmann::json plan_to_json(const TokenizationPlan& plan);
TokenizationPlan plan_from_json(const nlohmann::json& j);

/// Binary table: magic "LGTP" | u32 version | u64 num_fine | u32 fps_start |
/// f64 epsilon | u32 k | then coarse_indices, assignment, neighbors as
/// index-width-prefixed arrays (u8 width in {2, 4} | u64 count | values) and
/// the weights as u64 count | f64 values.
void write_plan_binary(std::ostream& os, const TokenizationPlan& plan);
TokenizationPlan read_plan_binary(std::istream& is);

}  // namespace labgatr::tokenizer
