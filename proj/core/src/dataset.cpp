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

#include "labgatr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace labgatr::data {

using mesh::MeshSample;
using mesh::Vec3;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Arc-length frame of a planar arc with total turning angle `bend`.
struct Centerline {
  double kappa;

  Vec3 point(double s) const {
    if (std::abs(kappa) < 1e-12) return {s, 0.0, 0.0};
    return {std::sin(kappa * s) / kappa, (1.0 - std::cos(kappa * s)) / kappa, 0.0};
  }
  Vec3 tangent(double s) const { return {std::cos(kappa * s), std::sin(kappa * s), 0.0}; }
  Vec3 normal(double s) const { return {-std::sin(kappa * s), std::cos(kappa * s), 0.0}; }
  static Vec3 binormal() { return {0.0, 0.0, 1.0}; }
};

double surface_radius(double s) { return 1.0 + 0.2 * std::sin(1.5 * s); }

Vec3 section_point(const Centerline& c, double s, double u, double w) {
  const auto p = c.point(s), n = c.normal(s), b = Centerline::binormal();
  return {p[0] + u * n[0] + w * b[0], p[1] + u * n[1] + w * b[1], p[2] + u * n[2] + w * b[2]};
}

void push3(std::vector<double>& v, const Vec3& x) { v.insert(v.end(), x.begin(), x.end()); }

MeshSample surface_tube(const TubeParams& prm, const Centerline& c, bool vertex_target) {
  MeshSample m;
  m.kind = mesh::CellKind::kTriangle;
  const std::size_t R = prm.rings, P = prm.ring_points;
  if (R < 2 || P < 3) throw std::invalid_argument("surface tube needs >= 2 rings of >= 3 points");
  std::vector<double> inlet_dir, inlet_dist, target;
  for (std::size_t i = 0; i < R; ++i) {
    const double s = prm.length * static_cast<double>(i) / static_cast<double>(R - 1);
    const double r = surface_radius(s);
    const auto t = c.tangent(s);
    for (std::size_t j = 0; j < P; ++j) {
      // Alternate rings are rotated half a step for better-shaped triangles.
      const double phi = 2.0 * kPi * (static_cast<double>(j) + 0.5 * static_cast<double>(i % 2)) / static_cast<double>(P);
      m.positions.push_back(section_point(c, s, r * std::cos(phi), r * std::sin(phi)));
      push3(inlet_dir, {-t[0], -t[1], -t[2]});
      inlet_dist.push_back(s);
      push3(target, {r * t[0], r * t[1], r * t[2]});
    }
  }
  for (std::size_t i = 0; i + 1 < R; ++i) {
    for (std::size_t j = 0; j < P; ++j) {
      const auto a = static_cast<std::uint32_t>(i * P + j);
      const auto b = static_cast<std::uint32_t>(i * P + (j + 1) % P);
      const auto a2 = static_cast<std::uint32_t>((i + 1) * P + j);
      const auto b2 = static_cast<std::uint32_t>((i + 1) * P + (j + 1) % P);
      if (i % 2 == 0) {
        m.cells.insert(m.cells.end(), {a, b, a2, b, b2, a2});
      } else {
        m.cells.insert(m.cells.end(), {a, b, b2, a, b2, a2});
      }
    }
  }
  auto normals = mesh::vertex_normals(m.positions, m.cells);
  // Orient outwards: compare the first normal with the radial direction.
  const auto p0 = m.positions[0], c0 = c.point(0.0);
  const double sign = (p0[0] - c0[0]) * normals[0] + (p0[1] - c0[1]) * normals[1] + (p0[2] - c0[2]) * normals[2];
  if (sign < 0) {
    for (auto& x : normals) x = -x;
    for (std::size_t f = 0; f < m.cells.size(); f += 3) std::swap(m.cells[f + 1], m.cells[f + 2]);
  }
  m.set_attribute("normal", 3, std::move(normals));
  m.set_attribute("inlet_direction", 3, std::move(inlet_dir));
  m.set_attribute("inlet_distance", 1, std::move(inlet_dist));
  if (vertex_target) {
    m.target_kind = mesh::TargetKind::kVertex;
    m.target_dim = 3;
    m.target = std::move(target);
  } else {
    m.target_kind = mesh::TargetKind::kMesh;
    m.target_dim = 1;
    m.target = {prm.bend};
  }
  return m;
}

MeshSample volume_tube(const TubeParams& prm, const Centerline& c) {
  MeshSample m;
  m.kind = mesh::CellKind::kTetrahedron;
  const int J = static_cast<int>(prm.disc_rings);
  if (J < 1 || prm.rings < 2) throw std::invalid_argument("volume tube needs >= 1 disc ring and >= 2 layers");
  // Hexagonal lattice in axial coordinates, warped so that hex ring j lies on
  // the circle of radius j / J.
  std::map<std::pair<int, int>, std::uint32_t> lattice;
  std::vector<std::pair<double, double>> disc;
  for (int a = -J; a <= J; ++a) {
    for (int b = -J; b <= J; ++b) {
      const int ring = std::max({std::abs(a), std::abs(b), std::abs(a + b)});
      if (ring > J) continue;
      double x = a + 0.5 * b, y = b * std::sqrt(3.0) / 2.0;
      const double len = std::hypot(x, y);
      if (ring > 0) {
        x *= ring / (J * len);
        y *= ring / (J * len);
      }
      lattice[{a, b}] = static_cast<std::uint32_t>(disc.size());
      disc.push_back({x, y});
    }
  }
  std::vector<std::array<std::uint32_t, 3>> tris;
  for (const auto& [ab, i0] : lattice) {
    const auto [a, b] = ab;
    auto at = [&](int da, int db) -> long {
      auto it = lattice.find({a + da, b + db});
      return it == lattice.end() ? -1 : static_cast<long>(it->second);
    };
    const long i1 = at(1, 0), i2 = at(0, 1), i3 = at(1, -1);
    if (i1 >= 0 && i2 >= 0) tris.push_back({i0, static_cast<std::uint32_t>(i1), static_cast<std::uint32_t>(i2)});
    if (i1 >= 0 && i3 >= 0) tris.push_back({i0, static_cast<std::uint32_t>(i3), static_cast<std::uint32_t>(i1)});
  }
  const std::size_t D = disc.size();
  std::vector<double> inlet_dir, wall_dist, target;
  for (std::size_t i = 0; i < prm.rings; ++i) {
    const double s = prm.length * static_cast<double>(i) / static_cast<double>(prm.rings - 1);
    const auto t = c.tangent(s);
    for (const auto& [x, y] : disc) {
      const double r = std::min(1.0, std::hypot(x, y));
      m.positions.push_back(section_point(c, s, x, y));
      push3(inlet_dir, {-t[0], -t[1], -t[2]});
      wall_dist.push_back(1.0 - r);
      const double f = 1.0 - r * r;
      push3(target, {f * t[0], f * t[1], f * t[2]});
    }
  }
  for (std::size_t i = 0; i + 1 < prm.rings; ++i) {
    for (const auto& tri : tris) {
      const auto lo = [&](std::uint32_t k) { return static_cast<std::uint32_t>(i * D + k); };
      const auto hi = [&](std::uint32_t k) { return static_cast<std::uint32_t>((i + 1) * D + k); };
      const auto a = tri[0], b = tri[1], cc = tri[2];
      m.cells.insert(m.cells.end(), {lo(a), lo(b), lo(cc), hi(a)});
      m.cells.insert(m.cells.end(), {lo(b), lo(cc), hi(a), hi(b)});
      m.cells.insert(m.cells.end(), {lo(cc), hi(a), hi(b), hi(cc)});
    }
  }
  m.set_attribute("inlet_direction", 3, std::move(inlet_dir));
  m.set_attribute("wall_distance", 1, std::move(wall_dist));
  m.target_kind = mesh::TargetKind::kVertex;
  m.target_dim = 3;
  m.target = std::move(target);
  return m;
}

}  // namespace

std::string toy_kind_name(ToyKind k) {
  switch (k) {
    case ToyKind::kSurface:
      return "surface";
    case ToyKind::kVolume:
      return "volume";
    case ToyKind::kMeshLevel:
      return "mesh-level";
  }
  return "?";
}

ToyKind toy_kind_from_name(const std::string& s) {
  if (s == "surface") return ToyKind::kSurface;
  if (s == "volume") return ToyKind::kVolume;
  if (s == "mesh-level") return ToyKind::kMeshLevel;
  throw std::invalid_argument("unknown toy dataset kind '" + s + "' (surface, volume, mesh-level)");
}

MeshSample make_tube(ToyKind kind, const TubeParams& prm) {
  if (!(prm.length > 0.0)) throw std::invalid_argument("tube length must be positive");
  const Centerline c{prm.bend / prm.length};
  MeshSample m = kind == ToyKind::kVolume ? volume_tube(prm, c)
                                          : surface_tube(prm, c, kind == ToyKind::kSurface);
  if (prm.jitter > 0.0) {
    std::mt19937_64 rng(splitmix(prm.seed ^ 0x6a09e667f3bcc909ull));
    std::normal_distribution<double> n(0.0, prm.jitter);
    for (auto& p : m.positions) {
      for (auto& x : p) x += n(rng);
    }
  }
  if (prm.move) m = mesh::transform(m, pga::random_rigid_motion(splitmix(prm.seed), false));
  m.validate();
  return m;
}

TubeParams sample_params(ToyKind kind, std::uint64_t seed, std::size_t index) {
  const std::uint64_t s = splitmix(seed * 0x9e3779b97f4a7c15ull + index + 1);
  std::mt19937_64 rng(s);
  std::uniform_real_distribution<double> bend(0.0, kPi / 2.0);
  std::uniform_real_distribution<double> length(3.0, 5.0);
  TubeParams p;
  p.seed = s;
  p.bend = bend(rng);
  p.length = length(rng);
  if (kind == ToyKind::kVolume) {
    p.rings = 15;
    p.disc_rings = 3;
  }
  return p;
}

std::vector<MeshSample> make_toy_dataset(ToyKind kind, std::size_t n_samples, std::uint64_t seed,
                                         std::size_t first_index) {
  std::vector<MeshSample> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) out.push_back(make_tube(kind, sample_params(kind, seed, first_index + i)));
  return out;
}

mesh::Schema default_schema(ToyKind kind) {
  using mesh::Role;
  switch (kind) {
    case ToyKind::kSurface:
      return {{Role::kPoint, "position"}, {Role::kPlane, "normal"}, {Role::kPlane, "inlet_direction"},
              {Role::kScalar, "inlet_distance"}};
    case ToyKind::kVolume:
      return {{Role::kPoint, "position"}, {Role::kPlane, "inlet_direction"}, {Role::kScalar, "wall_distance"}};
    case ToyKind::kMeshLevel:
      return {{Role::kPoint, "position"}, {Role::kPlane, "normal"}, {Role::kPlane, "inlet_direction"}};
  }
  return {};
}

}  // namespace labgatr::data
