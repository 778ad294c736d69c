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

#include "labgatr/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>

#include "labgatr/binary_io.hpp"

namespace labgatr::tokenizer {

namespace {

inline double dist_sq(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

struct Candidate {
  double d2;
  std::uint32_t index;
  bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

// Sorted list of the k best candidates under (distance, index) order.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  void offer(Candidate c) {
    if (items_.size() == k_ && !(c < items_.back())) return;
    items_.insert(std::upper_bound(items_.begin(), items_.end(), c), c);
    if (items_.size() > k_) items_.pop_back();
  }

  bool full() const { return items_.size() == k_; }
  double worst() const { return items_.back().d2; }
  const std::vector<Candidate>& items() const { return items_; }
  void clear() { items_.clear(); }

 private:
  std::size_t k_;
  std::vector<Candidate> items_;
};

// Uniform bucketing of the reference points; queries are exact.
class Grid {
 public:
  explicit Grid(std::span<const Vec3> points) : points_(points) {
    lo_ = hi_ = points[0];
    for (const auto& p : points) {
      for (int a = 0; a < 3; ++a) {
        lo_[a] = std::min(lo_[a], p[a]);
        hi_[a] = std::max(hi_[a], p[a]);
      }
    }
    double extent = 0.0;
    for (int a = 0; a < 3; ++a) extent = std::max(extent, hi_[a] - lo_[a]);
    if (extent == 0.0) extent = 1.0;
    double volume = 1.0;
    for (int a = 0; a < 3; ++a) volume *= std::max(hi_[a] - lo_[a], extent * 1e-3);
    cell_ = std::cbrt(2.0 * volume / static_cast<double>(points.size()));
    for (int a = 0; a < 3; ++a) {
      dims_[a] = std::clamp<long>(static_cast<long>((hi_[a] - lo_[a]) / cell_) + 1, 1, 1024);
    }
    cells_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]), {});
    for (std::uint32_t i = 0; i < points.size(); ++i) {
      const auto c = cell_of(points[i]);
      cells_[flat(c)].push_back(i);
    }
  }

  void query(const Vec3& q, TopK& best) const {
    best.clear();
    const auto c = cell_of(q);
    const long max_r = std::max({dims_[0], dims_[1], dims_[2]});
    for (long r = 0; r <= max_r; ++r) {
      visit_ring(c, r, q, best);
      // Smallest distance from q to any cell outside the visited cube.
      double bound = std::numeric_limits<double>::infinity();
      bool remaining = false;
      for (int a = 0; a < 3; ++a) {
        if (c[a] - r > 0) {
          remaining = true;
          bound = std::min(bound, std::max(0.0, q[a] - (lo_[a] + static_cast<double>(c[a] - r) * cell_)));
        }
        if (c[a] + r < dims_[a] - 1) {
          remaining = true;
          bound = std::min(bound, std::max(0.0, (lo_[a] + static_cast<double>(c[a] + r + 1) * cell_) - q[a]));
        }
      }
      if (!remaining) return;
      // Slack absorbs rounding in the cell index computation.
      bound = std::max(0.0, bound - 1e-9 * cell_);
      if (best.full() && best.worst() < bound * bound) return;
    }
  }

 private:
  using Cell = std::array<long, 3>;

  Cell cell_of(const Vec3& p) const {
    Cell c;
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp<long>(static_cast<long>(std::floor((p[a] - lo_[a]) / cell_)), 0, dims_[a] - 1);
    }
    return c;
  }

  std::size_t flat(const Cell& c) const {
    return static_cast<std::size_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0]);
  }

  void visit_ring(const Cell& c, long r, const Vec3& q, TopK& best) const {
    for (long z = c[2] - r; z <= c[2] + r; ++z) {
      if (z < 0 || z >= dims_[2]) continue;
      for (long y = c[1] - r; y <= c[1] + r; ++y) {
        if (y < 0 || y >= dims_[1]) continue;
        for (long x = c[0] - r; x <= c[0] + r; ++x) {
          if (x < 0 || x >= dims_[0]) continue;
          const long cheb = std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])});
          if (cheb != r) continue;
          for (auto i : cells_[flat({x, y, z})]) best.offer({dist_sq(q, points_[i]), i});
        }
      }
    }
  }

  std::span<const Vec3> points_;
  Vec3 lo_{}, hi_{};
  double cell_ = 1.0;
  std::array<long, 3> dims_{1, 1, 1};
  std::vector<std::vector<std::uint32_t>> cells_;
};

// k nearest reference points of every query, as (index, squared distance).
void knn(std::span<const Vec3> queries, std::span<const Vec3> refs, std::size_t k, KnnMethod method,
         std::vector<std::uint32_t>& index, std::vector<double>& d2) {
  index.assign(queries.size() * k, 0);
  d2.assign(queries.size() * k, 0.0);
  const bool use_grid = method == KnnMethod::kGrid ||
                        (method == KnnMethod::kAuto && queries.size() > kGridThreshold);
  TopK best(k);
  std::optional<Grid> grid;
  if (use_grid) grid.emplace(refs);
  for (std::size_t v = 0; v < queries.size(); ++v) {
    if (grid) {
      grid->query(queries[v], best);
    } else {
      best.clear();
      for (std::uint32_t j = 0; j < refs.size(); ++j) best.offer({dist_sq(queries[v], refs[j]), j});
    }
    const auto& items = best.items();
    for (std::size_t j = 0; j < k; ++j) {
      index[v * k + j] = items[j].index;
      d2[v * k + j] = items[j].d2;
    }
  }
}

}  // namespace

std::size_t coarse_count(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("sub-sampling ratio must be in (0, 1], got " + std::to_string(ratio));
  }
  const auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n, 1));
}

std::uint32_t fps_start_index(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::out_of_range("fps_start_index: empty point set");
  std::mt19937_64 rng(seed);
  return static_cast<std::uint32_t>(rng() % n);
}

std::vector<std::uint32_t> farthest_point_sampling_from(std::span<const Vec3> positions,
                                                        std::size_t n_coarse, std::uint32_t start) {
  const std::size_t n = positions.size();
  if (n_coarse < 1 || n_coarse > n) {
    throw std::out_of_range("farthest_point_sampling: n_coarse = " + std::to_string(n_coarse) +
                            " not in [1, " + std::to_string(n) + "]");
  }
  if (start >= n) throw std::out_of_range("farthest_point_sampling: start index out of range");
  std::vector<std::uint32_t> selected;
  selected.reserve(n_coarse);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  std::uint32_t last = start;
  selected.push_back(last);
  taken[last] = 1;
  while (selected.size() < n_coarse) {
    const auto& p = positions[last];
    std::uint32_t best = 0;
    double best_d2 = -1.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      const double d = dist_sq(positions[i], p);
      if (d < min_d2[i]) min_d2[i] = d;
      if (!taken[i] && min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    last = best;
    taken[last] = 1;
    selected.push_back(last);
  }
  return selected;
}

std::vector<std::uint32_t> farthest_point_sampling(std::span<const Vec3> positions,
                                                   std::size_t n_coarse, std::uint64_t seed) {
  return farthest_point_sampling_from(positions, n_coarse, fps_start_index(positions.size(), seed));
}

std::vector<Vec3> gather_positions(std::span<const Vec3> positions,
                                   std::span<const std::uint32_t> indices) {
  std::vector<Vec3> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(positions[i]);
  return out;
}

std::vector<std::uint32_t> assign_clusters(std::span<const Vec3> positions,
                                           std::span<const std::uint32_t> coarse_indices,
                                           KnnMethod method) {
  if (coarse_indices.empty()) throw std::invalid_argument("assign_clusters: empty coarse set");
  std::vector<std::uint32_t> sorted(coarse_indices.begin(), coarse_indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("assign_clusters: duplicate coarse indices");
  }
  if (sorted.back() >= positions.size()) throw std::invalid_argument("assign_clusters: coarse index out of range");
  const auto coarse = gather_positions(positions, coarse_indices);
  std::vector<std::uint32_t> index;
  std::vector<double> d2;
  knn(positions, coarse, 1, method, index, d2);
  return index;
}

InterpTable interp_plan(std::span<const Vec3> fine, std::span<const Vec3> coarse, std::size_t k,
                        double epsilon, KnnMethod method) {
  if (k == 0 || k > coarse.size()) {
    throw std::invalid_argument("interp_plan: k = " + std::to_string(k) + " exceeds coarse size " +
                                std::to_string(coarse.size()));
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("interp_plan: epsilon must be positive");
  InterpTable t;
  t.k = k;
  std::vector<double> d2;
  knn(fine, coarse, k, method, t.neighbors, d2);
  t.weights.resize(d2.size());
  for (std::size_t v = 0; v < fine.size(); ++v) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double lambda = 1.0 / (d2[v * k + j] + epsilon);
      t.weights[v * k + j] = lambda;
      total += lambda;
    }
    for (std::size_t j = 0; j < k; ++j) t.weights[v * k + j] /= total;
  }
  return t;
}

std::vector<double> mean_pool(std::span<const double> messages, std::size_t row_width,
                              std::span<const std::uint32_t> assignment, std::size_t n_coarse) {
  if (row_width == 0 || messages.size() != assignment.size() * row_width) {
    throw std::invalid_argument("mean_pool: one message row per fine vertex required");
  }
  std::vector<double> out(n_coarse * row_width, 0.0);
  std::vector<std::size_t> count(n_coarse, 0);
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    const auto g = assignment[v];
    if (g >= n_coarse) throw std::invalid_argument("mean_pool: assignment out of range");
    ++count[g];
    for (std::size_t i = 0; i < row_width; ++i) out[g * row_width + i] += messages[v * row_width + i];
  }
  for (std::size_t g = 0; g < n_coarse; ++g) {
    if (count[g] == 0) throw std::logic_error("mean_pool: cluster " + std::to_string(g) + " is empty");
    for (std::size_t i = 0; i < row_width; ++i) out[g * row_width + i] /= static_cast<double>(count[g]);
  }
  return out;
}

std::vector<double> interpolate(std::span<const double> coarse_features, std::size_t row_width,
                                const InterpTable& table) {
  if (table.k == 0 || table.neighbors.size() != table.weights.size()) {
    throw std::invalid_argument("interpolate: malformed interpolation table");
  }
  const std::size_t n = table.neighbors.size() / table.k;
  const std::size_t m = coarse_features.size() / row_width;
  std::vector<double> out(n * row_width, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 0; j < table.k; ++j) {
      const auto p = table.neighbors[v * table.k + j];
      if (p >= m) throw std::invalid_argument("interpolate: neighbor index out of range");
      const double w = table.weights[v * table.k + j];
      for (std::size_t i = 0; i < row_width; ++i) out[v * row_width + i] += w * coarse_features[p * row_width + i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> TokenizationPlan::cluster_sizes() const {
  std::vector<std::size_t> sizes(n_coarse(), 0);
  for (auto a : assignment) ++sizes.at(a);
  return sizes;
}

void TokenizationPlan::validate() const {
  if (coarse_indices.empty()) throw std::logic_error("plan: empty coarse set");
  if (assignment.size() != num_fine) throw std::logic_error("plan: assignment size != num_fine");
  for (auto c : coarse_indices) {
    if (c >= num_fine) throw std::logic_error("plan: coarse index out of range");
  }
  for (std::size_t p = 0; p < coarse_indices.size(); ++p) {
    if (assignment[coarse_indices[p]] != p) {
      throw std::logic_error("plan: coarse vertex " + std::to_string(coarse_indices[p]) +
                             " is not assigned to its own cluster");
    }
  }
  for (auto s : cluster_sizes()) {
    if (s == 0) throw std::logic_error("plan: empty cluster");
  }
  if (interp.k == 0 || interp.neighbors.size() != num_fine * interp.k ||
      interp.weights.size() != num_fine * interp.k) {
    throw std::logic_error("plan: interpolation table has wrong size");
  }
  for (std::size_t v = 0; v < num_fine; ++v) {
    double s = 0.0;
    for (std::size_t j = 0; j < interp.k; ++j) {
      const double w = interp.weights[v * interp.k + j];
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::logic_error("plan: invalid weight");
      if (interp.neighbors[v * interp.k + j] >= coarse_indices.size()) {
        throw std::logic_error("plan: neighbor out of range");
      }
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::logic_error("plan: weights do not sum to 1");
  }
}

bool operator==(const InterpTable& a, const InterpTable& b) {
  return a.k == b.k && a.neighbors == b.neighbors && a.weights == b.weights;
}

bool operator==(const TokenizationPlan& a, const TokenizationPlan& b) {
  return a.num_fine == b.num_fine && a.fps_start == b.fps_start && a.epsilon == b.epsilon &&
         a.coarse_indices == b.coarse_indices && a.assignment == b.assignment && a.interp == b.interp;
}

TokenizationPlan build_plan(std::span<const Vec3> positions, const PlanOptions& options) {
  TokenizationPlan plan;
  plan.num_fine = positions.size();
  plan.epsilon = options.epsilon;
  const std::size_t m = coarse_count(positions.size(), options.ratio);
  plan.fps_start = fps_start_index(positions.size(), options.seed);
  plan.coarse_indices = farthest_point_sampling_from(positions, m, plan.fps_start);
  plan.assignment = assign_clusters(positions, plan.coarse_indices, options.method);
  const auto coarse = gather_positions(positions, plan.coarse_indices);
  plan.interp = interp_plan(positions, coarse, std::min(options.k, m), options.epsilon, options.method);
  return plan;
}

// ---------------------------------------------------------------------------

nlohmann::json plan_to_json(const TokenizationPlan& plan) {
  return nlohmann::json{{"num_fine", plan.num_fine},
                        {"fps_start", plan.fps_start},
                        {"epsilon", plan.epsilon},
                        {"k", plan.interp.k},
                        {"coarse_indices", plan.coarse_indices},
                        {"assignment", plan.assignment},
                        {"interp_neighbors", plan.interp.neighbors},
                        {"interp_weights", plan.interp.weights}};
}

TokenizationPlan plan_from_json(const nlohmann::json& j) {
  TokenizationPlan plan;
  plan.num_fine = j.at("num_fine").get<std::size_t>();
  plan.fps_start = j.at("fps_start").get<std::uint32_t>();
  plan.epsilon = j.at("epsilon").get<double>();
  plan.interp.k = j.at("k").get<std::size_t>();
  plan.coarse_indices = j.at("coarse_indices").get<std::vector<std::uint32_t>>();
  plan.assignment = j.at("assignment").get<std::vector<std::uint32_t>>();
  plan.interp.neighbors = j.at("interp_neighbors").get<std::vector<std::uint32_t>>();
  plan.interp.weights = j.at("interp_weights").get<std::vector<double>>();
  plan.validate();
  return plan;
}

namespace {

constexpr char kPlanMagic[4] = {'L', 'G', 'T', 'P'};
constexpr std::uint32_t kPlanVersion = 1;

void write_index_array(std::ostream& os, const std::vector<std::uint32_t>& a) {
  const std::uint32_t mx = a.empty() ? 0 : *std::max_element(a.begin(), a.end());
  const std::uint8_t width = mx < 65536 ? 2 : 4;
  binary::write_le<std::uint8_t>(os, width);
  binary::write_le<std::uint64_t>(os, a.size());
  for (auto v : a) {
    if (width == 2) {
      binary::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(v));
    } else {
      binary::write_le<std::uint32_t>(os, v);
    }
  }
}

std::vector<std::uint32_t> read_index_array(std::istream& is) {
  const auto width = binary::read_le<std::uint8_t>(is);
  if (width != 2 && width != 4) throw std::runtime_error("plan: unsupported index width");
  const auto n = binary::read_le<std::uint64_t>(is);
  if (n > (std::uint64_t{1} << 32)) throw std::runtime_error("plan: array too large");
  std::vector<std::uint32_t> a(n);
  for (auto& v : a) v = width == 2 ? binary::read_le<std::uint16_t>(is) : binary::read_le<std::uint32_t>(is);
  return a;
}

}  // namespace

void write_plan_binary(std::ostream& os, const TokenizationPlan& plan) {
  os.write(kPlanMagic, 4);
  binary::write_le<std::uint32_t>(os, kPlanVersion);
  binary::write_le<std::uint64_t>(os, plan.num_fine);
  binary::write_le<std::uint32_t>(os, plan.fps_start);
  binary::write_le<double>(os, plan.epsilon);
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(plan.interp.k));
  write_index_array(os, plan.coarse_indices);
  write_index_array(os, plan.assignment);
  write_index_array(os, plan.interp.neighbors);
  binary::write_le<std::uint64_t>(os, plan.interp.weights.size());
  for (double w : plan.interp.weights) binary::write_le<double>(os, w);
}

TokenizationPlan read_plan_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kPlanMagic, 4)) {
    throw std::runtime_error("not a tokenization plan");
  }
  if (binary::read_le<std::uint32_t>(is) != kPlanVersion) throw std::runtime_error("plan: unsupported version");
  TokenizationPlan plan;
  plan.num_fine = binary::read_le<std::uint64_t>(is);
  plan.fps_start = binary::read_le<std::uint32_t>(is);
  plan.epsilon = binary::read_le<double>(is);
  plan.interp.k = binary::read_le<std::uint32_t>(is);
  plan.coarse_indices = read_index_array(is);
  plan.assignment = read_index_array(is);
  plan.interp.neighbors = read_index_array(is);
  const auto nw = binary::read_le<std::uint64_t>(is);
  if (nw != plan.interp.neighbors.size()) throw std::runtime_error("plan: weight count mismatch");
  plan.interp.weights.resize(nw);
  for (auto& w : plan.interp.weights) w = binary::read_le<double>(is);
  plan.validate();
  return plan;
}

}  // namespace labgatr::tokenizer
