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

#include "labgatr/mesh.hpp"

// Procedural bent tubes used as small training sets.
//
// Every tube follows a planar circular arc of length L and bend angle theta,
// then gets a random rotation and translation.
//
//   surface:    triangulated tube with radius 1 + 0.2 sin(1.5 s); target is the
//               unit tangent scaled by the local radius.
//   volume:     tetrahedralized unit-radius tube; target is the tangent scaled
//               by 1 - r^2 (parabolic profile, zero on the wall).
//   mesh-level: triangulated tube; target is the bend angle in radians.
namespace labgatr::data {

enum class ToyKind { kSurface, kVolume, kMeshLevel };

std::string toy_kind_name(ToyKind k);
ToyKind toy_kind_from_name(const std::string& s);

struct TubeParams {
  double length = 4.0;
  double bend = 0.0;  // radians
  std::size_t rings = 13;        // axial layers
  std::size_t ring_points = 16;  // surface only
  std::size_t disc_rings = 3;    // volume only: hexagonal rings per cross-section
  double jitter = 1e-4;          // breaks distance ties between lattice vertices
  std::uint64_t seed = 0;        // jitter and motion
  bool move = true;              // apply a random rigid motion
};

mesh::MeshSample make_tube(ToyKind kind, const TubeParams& params);

/// Parameters drawn for sample `index` of a dataset with the given seed.
TubeParams sample_params(ToyKind kind, std::uint64_t seed, std::size_t index);

std::vector<mesh::MeshSample> make_toy_dataset(ToyKind kind, std::size_t n_samples,
                                               std::uint64_t seed, std::size_t first_index = 0);

/// Descriptor channels the toy generator provides for each kind.
mesh::Schema default_schema(ToyKind kind);

}  // namespace labgatr::data
