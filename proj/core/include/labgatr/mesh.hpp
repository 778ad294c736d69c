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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "labgatr/autodiff.hpp"
#include "labgatr/pga.hpp"

namespace labgatr::mesh {

using pga::Vec3;

enum class CellKind { kTriangle, kTetrahedron };
enum class TargetKind { kNone, kVertex, kMesh };

std::size_t cell_size(CellKind kind);

/// Named per-vertex array, `dim` values per vertex. Three-component arrays
/// are directions and rotate with the mesh; other widths are invariant.
struct Attribute {
  std::string name;
  std::size_t dim = 1;
  std::vector<double> values;

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct MeshSample {
  std::vector<Vec3> positions;
  CellKind kind = CellKind::kTriangle;
  std::vector<std::uint32_t> cells;  // flat, cell_size(kind) indices per cell
  std::vector<Attribute> attributes;
  TargetKind target_kind = TargetKind::kNone;
  std::size_t target_dim = 0;
  std::vector<double> target;  // n x target_dim or target_dim values

  std::size_t num_vertices() const { return positions.size(); }
  std::size_t num_cells() const { return cells.size() / cell_size(kind); }

  const Attribute* find(std::string_view name) const;
  Attribute& set_attribute(const std::string& name, std::size_t dim, std::vector<double> values);

  /// Throws std::invalid_argument on out-of-range cells, wrong array sizes or
  /// a surface mesh without a "normal" attribute.
  void validate() const;

  friend bool operator==(const MeshSample&, const MeshSample&) = default;
};

/// Area-weighted average of incident face normals, normalized. Throws
/// std::invalid_argument if a vertex has no incident face of positive area.
std::vector<double> vertex_normals(const std::vector<Vec3>& positions,
                                   const std::vector<std::uint32_t>& triangles);

/// Boundary triangles of a tetrahedral mesh, oriented outwards.
std::vector<std::uint32_t> boundary_faces(const std::vector<Vec3>& positions,
                                          const std::vector<std::uint32_t>& tets);

/// Moves positions, rotates three-component attributes and vector targets.
MeshSample transform(const MeshSample& sample, const pga::Versor& g);

// ---------------------------------------------------------------------------
// Descriptor schema: which attribute feeds which multivector channel.

enum class Role { kPoint, kPlane, kScalar };

/// kPoint reads "position" (the vertex itself) or a three-component
/// attribute; kPlane reads a three-component normal and places the plane
/// through the vertex; kScalar reads a one-component attribute.
struct Descriptor {
  Role role = Role::kPoint;
  std::string name = "position";

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

using Schema = std::vector<Descriptor>;

std::string role_name(Role r);
Role role_from_name(const std::string& s);
nlohmann::json schema_to_json(const Schema& s);
Schema schema_from_json(const nlohmann::json& j);

/// [n, schema.size(), 16] feature tensor. Throws std::invalid_argument on a
/// missing or mis-sized descriptor and pga::GeometryError on a zero normal.
autodiff::Tensor embed_mesh(const MeshSample& sample, const Schema& schema);

}  // namespace labgatr::mesh
