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

#include "labgatr/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace labgatr::mesh {

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

std::size_t cell_size(CellKind kind) { return kind == CellKind::kTriangle ? 3 : 4; }

const Attribute* MeshSample::find(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

Attribute& MeshSample::set_attribute(const std::string& name, std::size_t dim,
                                     std::vector<double> values) {
  for (auto& a : attributes) {
    if (a.name == name) {
      a.dim = dim;
      a.values = std::move(values);
      return a;
    }
  }
  attributes.push_back({name, dim, std::move(values)});
  return attributes.back();
}

void MeshSample::validate() const {
  const std::size_t n = positions.size();
  if (n == 0) throw std::invalid_argument("mesh has no vertices");
  if (cells.size() % cell_size(kind) != 0) throw std::invalid_argument("cell array is not a whole number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] >= n) {
      throw std::invalid_argument("cell " + std::to_string(i / cell_size(kind)) + " references vertex " +
                                  std::to_string(cells[i]) + " of " + std::to_string(n));
    }
  }
  for (const auto& a : attributes) {
    if (a.dim == 0 || a.values.size() != n * a.dim) {
      throw std::invalid_argument("attribute '" + a.name + "' has " + std::to_string(a.values.size()) +
                                  " values, expected " + std::to_string(n * a.dim));
    }
  }
  if (kind == CellKind::kTriangle && !find("normal")) {
    throw std::invalid_argument("surface mesh without a 'normal' attribute");
  }
  switch (target_kind) {
    case TargetKind::kNone:
      if (!target.empty()) throw std::invalid_argument("target values without a target kind");
      break;
    case TargetKind::kVertex:
      if (target_dim == 0 || target.size() != n * target_dim) throw std::invalid_argument("vertex target has wrong size");
      break;
    case TargetKind::kMesh:
      if (target_dim == 0 || target.size() != target_dim) throw std::invalid_argument("mesh target has wrong size");
      break;
  }
}

std::vector<double> vertex_normals(const std::vector<Vec3>& positions,
                                   const std::vector<std::uint32_t>& triangles) {
  std::vector<Vec3> acc(positions.size(), Vec3{0, 0, 0});
  for (std::size_t f = 0; f + 2 < triangles.size(); f += 3) {
    const auto a = triangles[f], b = triangles[f + 1], c = triangles[f + 2];
    // Cross product length is twice the area, so summing it weights by area.
    const auto n = cross(sub(positions.at(b), positions.at(a)), sub(positions.at(c), positions.at(a)));
    for (auto v : {a, b, c}) {
      for (int i = 0; i < 3; ++i) acc[v][i] += n[i];
    }
  }
  std::vector<double> out;
  out.reserve(3 * positions.size());
  for (std::size_t v = 0; v < acc.size(); ++v) {
    const double len = std::sqrt(dot(acc[v], acc[v]));
    if (!(len > 0.0)) {
      throw std::invalid_argument("vertex " + std::to_string(v) + " has no incident face of positive area");
    }
    for (int i = 0; i < 3; ++i) out.push_back(acc[v][i] / len);
  }
  return out;
}

std::vector<std::uint32_t> boundary_faces(const std::vector<Vec3>& positions,
                                          const std::vector<std::uint32_t>& tets) {
  // Faces seen once are on the boundary.
  std::map<std::array<std::uint32_t, 3>, std::pair<int, std::array<std::uint32_t, 4>>> seen;
  for (std::size_t t = 0; t + 3 < tets.size(); t += 4) {
    const std::array<std::uint32_t, 4> v = {tets[t], tets[t + 1], tets[t + 2], tets[t + 3]};
    for (int skip = 0; skip < 4; ++skip) {
      std::array<std::uint32_t, 4> f{};
      int j = 0;
      for (int i = 0; i < 4; ++i) {
        if (i != skip) f[j++] = v[i];
      }
      f[3] = v[skip];
      std::array<std::uint32_t, 3> key = {f[0], f[1], f[2]};
      std::sort(key.begin(), key.end());
      auto& e = seen[key];
      e.first += 1;
      e.second = f;
    }
  }
  std::vector<std::uint32_t> out;
  for (const auto& [key, e] : seen) {
    if (e.first != 1) continue;
    auto f = e.second;
    const auto n = cross(sub(positions[f[1]], positions[f[0]]), sub(positions[f[2]], positions[f[0]]));
    if (dot(n, sub(positions[f[3]], positions[f[0]])) > 0) std::swap(f[1], f[2]);
    out.insert(out.end(), {f[0], f[1], f[2]});
  }
  return out;
}

MeshSample transform(const MeshSample& sample, const pga::Versor& g) {
  MeshSample out = sample;
  for (auto& p : out.positions) p = pga::apply_to_point(g, p);
  auto rotate = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i + 2 < v.size(); i += 3) {
      const auto d = pga::apply_to_direction(g, {v[i], v[i + 1], v[i + 2]});
      std::copy(d.begin(), d.end(), v.begin() + i);
    }
  };
  for (auto& a : out.attributes) {
    if (a.dim == 3) rotate(a.values);
  }
  if (out.target_dim == 3) rotate(out.target);
  return out;
}

// ---------------------------------------------------------------------------

std::string role_name(Role r) {
  switch (r) {
    case Role::kPoint:
      return "point";
    case Role::kPlane:
      return "plane";
    case Role::kScalar:
      return "scalar";
  }
  return "?";
}

Role role_from_name(const std::string& s) {
  if (s == "point") return Role::kPoint;
  if (s == "plane") return Role::kPlane;
  if (s == "scalar") return Role::kScalar;
  throw std::invalid_argument("unknown descriptor role '" + s + "' (expected point, plane or scalar)");
}

nlohmann::json schema_to_json(const Schema& s) {
  auto j = nlohmann::json::array();
  for (const auto& d : s) j.push_back({{"role", role_name(d.role)}, {"name", d.name}});
  return j;
}

Schema schema_from_json(const nlohmann::json& j) {
  Schema s;
  for (const auto& e : j) {
    for (const auto& [key, _] : e.items()) {
      if (key != "role" && key != "name") throw std::invalid_argument("descriptor: unknown key '" + key + "'");
    }
    s.push_back({role_from_name(e.at("role").get<std::string>()), e.at("name").get<std::string>()});
  }
  if (s.empty()) throw std::invalid_argument("descriptor schema is empty");
  return s;
}

autodiff::Tensor embed_mesh(const MeshSample& sample, const Schema& schema) {
  if (schema.empty()) throw std::invalid_argument("embed_mesh: empty schema");
  const std::size_t n = sample.num_vertices();
  const std::size_t c = schema.size();
  autodiff::Tensor out({n, c, pga::kNumBlades});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto& d = schema[ch];
    const Attribute* a = nullptr;
    if (!(d.role == Role::kPoint && d.name == "position")) {
      a = sample.find(d.name);
      if (!a) throw std::invalid_argument("embed_mesh: missing descriptor '" + d.name + "'");
      const std::size_t want = d.role == Role::kScalar ? 1 : 3;
      if (a->dim != want) {
        throw std::invalid_argument("embed_mesh: descriptor '" + d.name + "' has width " +
                                    std::to_string(a->dim) + ", role " + role_name(d.role) +
                                    " needs " + std::to_string(want));
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      pga::Multivector m;
      switch (d.role) {
        case Role::kPoint:
          m = pga::embed(pga::Point{a ? Vec3{a->values[3 * v], a->values[3 * v + 1], a->values[3 * v + 2]}
                                      : sample.positions[v]});
          break;
        case Role::kPlane: {
          const Vec3 nrm{a->values[3 * v], a->values[3 * v + 1], a->values[3 * v + 2]};
          m = pga::embed(pga::Plane{nrm, dot(nrm, sample.positions[v])});
          break;
        }
        case Role::kScalar:
          m = pga::embed(pga::Scalar{a->values[v]});
          break;
      }
      std::copy_n(m.coeffs().data(), pga::kNumBlades, out.data.data() + (v * c + ch) * pga::kNumBlades);
    }
  }
  return out;
}

}  // namespace labgatr::mesh
