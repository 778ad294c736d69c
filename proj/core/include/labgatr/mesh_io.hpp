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

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "labgatr/mesh.hpp"

// Mesh files.
//
// Extended OFF (triangles only):
//
//   OFF
//   <vertices> <faces> <edges>
//   x y z                          (one line per vertex)
//   3 a b c                        (one line per face)
//   ATTRIBUTE <name> <dim> <ascii|binary>
//   <dim values per line, one line per vertex>
//   TARGET <vertex|mesh> <dim> <ascii|binary>
//   <dim values per line, one line per vertex, or a single line>
//
// Binary values are the 8 little-endian bytes of an IEEE double written as 16
// hex digits, so they roundtrip bit-exactly. '#' starts a comment.
//
// Legacy VTK ASCII unstructured grids: cell type 5 (triangle) or 10
// (tetrahedron), POINT_DATA with SCALARS / VECTORS / NORMALS / FIELD arrays.
// A point array named "target" is a vertex target; a dataset FIELD array
// named "target" with one tuple is a mesh target.
namespace labgatr::mesh {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class Encoding { kAscii, kBinary };

MeshSample read_off(std::istream& is, const std::string& source = "<stream>");
MeshSample read_vtk(std::istream& is, const std::string& source = "<stream>");
void write_off(std::ostream& os, const MeshSample& sample, Encoding encoding = Encoding::kAscii);
void write_vtk(std::ostream& os, const MeshSample& sample);

/// Dispatches on the extension (.off or .vtk). Surface meshes without a
/// "normal" attribute get area-weighted vertex normals.
MeshSample load_mesh(const std::filesystem::path& path);
void save_mesh(const std::filesystem::path& path, const MeshSample& sample,
               Encoding encoding = Encoding::kAscii);

/// All .off / .vtk files of a directory in file name order.
std::vector<MeshSample> load_directory(const std::filesystem::path& dir);
std::vector<std::filesystem::path> list_mesh_files(const std::filesystem::path& dir);

std::string encode_hex(double x);
double decode_hex(std::string_view s);

}  // namespace labgatr::mesh
