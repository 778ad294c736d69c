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

#include "labgatr/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace labgatr::mesh {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Line-oriented reader that drops comments and blank lines.
class Lines {
 public:
  Lines(std::istream& is, std::string source, bool comments) : is_(is), source_(std::move(source)), comments_(comments) {}

  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (comments_) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
      }
      tokens.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    tokens.clear();
    return false;
  }

  std::vector<std::string> expect(const char* what) {
    std::vector<std::string> t;
    if (!next(t)) fail(std::string("unexpected end of file, expected ") + what);
    return t;
  }

  bool raw_line(std::string& line) {
    if (!std::getline(is_, line)) return false;
    ++line_no_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }
  std::size_t line() const { return line_no_; }

 private:
  std::istream& is_;
  std::string source_;
  bool comments_;
  std::size_t line_no_ = 0;
};

double parse_double(const Lines& in, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) in.fail("invalid number '" + s + "'");
  return v;
}

std::uint64_t parse_count(const Lines& in, const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    in.fail("invalid count '" + s + "'");
  }
  errno = 0;
  const auto v = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE || v > (std::uint64_t{1} << 31)) in.fail("count out of range '" + s + "'");
  return v;
}

Encoding parse_encoding(const Lines& in, const std::string& s) {
  if (s == "ascii") return Encoding::kAscii;
  if (s == "binary") return Encoding::kBinary;
  in.fail("unknown encoding '" + s + "' (expected ascii or binary)");
}

std::vector<double> read_rows(Lines& in, std::size_t rows, std::size_t dim, Encoding enc) {
  std::vector<double> out;
  out.reserve(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto t = in.expect("attribute row");
    if (t.size() != dim) {
      in.fail("expected " + std::to_string(dim) + " values, found " + std::to_string(t.size()));
    }
    for (const auto& s : t) {
      if (enc == Encoding::kAscii) {
        out.push_back(parse_double(in, s));
      } else {
        try {
          out.push_back(decode_hex(s));
        } catch (const std::invalid_argument& e) {
          in.fail(e.what());
        }
      }
    }
  }
  return out;
}

void write_rows(std::ostream& os, const std::vector<double>& v, std::size_t dim, Encoding enc) {
  for (std::size_t i = 0; i < v.size(); i += dim) {
    for (std::size_t j = 0; j < dim; ++j) {
      if (j) os << ' ';
      os << (enc == Encoding::kAscii ? fmt(v[i + j]) : encode_hex(v[i + j]));
    }
    os << '\n';
  }
}

void check_name(const Lines& in, const std::string& name) {
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
      in.fail("invalid attribute name '" + name + "'");
    }
  }
}

void finish(MeshSample& m, const std::string& source) {
  if (m.kind == CellKind::kTriangle && !m.find("normal")) {
    if (m.cells.empty()) throw ParseError(source, 0, "surface mesh has no faces to derive normals from");
    try {
      m.set_attribute("normal", 3, vertex_normals(m.positions, m.cells));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, 0, e.what());
    }
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 0, e.what());
  }
}

}  // namespace

std::string encode_hex(double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int b = 0; b < 8; ++b) {
    const auto byte = static_cast<unsigned>((bits >> (8 * b)) & 0xffu);
    s[2 * b] = digits[byte >> 4];
    s[2 * b + 1] = digits[byte & 0xfu];
  }
  return s;
}

double decode_hex(std::string_view s) {
  if (s.size() != 16) throw std::invalid_argument("binary value must be 16 hex digits, got '" + std::string(s) + "'");
  auto nibble = [&](char c) -> unsigned {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("invalid hex digit in '" + std::string(s) + "'");
  };
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) {
    const std::uint64_t byte = (nibble(s[2 * b]) << 4) | nibble(s[2 * b + 1]);
    bits |= byte << (8 * b);
  }
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

// ---------------------------------------------------------------------------

MeshSample read_off(std::istream& is, const std::string& source) {
  Lines in(is, source, true);
  auto t = in.expect("OFF header");
  if (t.size() != 1 || t[0] != "OFF") in.fail("expected 'OFF' header");
  t = in.expect("counts");
  if (t.size() != 3) in.fail("expected '<vertices> <faces> <edges>'");
  const auto nv = parse_count(in, t[0]);
  const auto nf = parse_count(in, t[1]);
  MeshSample m;
  m.kind = CellKind::kTriangle;
  m.positions.resize(nv);
  for (auto& p : m.positions) {
    t = in.expect("vertex");
    if (t.size() != 3) in.fail("vertex line needs 3 coordinates");
    for (int i = 0; i < 3; ++i) p[i] = parse_double(in, t[i]);
  }
  m.cells.reserve(3 * nf);
  for (std::uint64_t f = 0; f < nf; ++f) {
    t = in.expect("face");
    const auto k = parse_count(in, t[0]);
    if (k != 3) in.fail("unsupported cell with " + std::to_string(k) + " vertices (only triangles)");
    if (t.size() != 4) in.fail("face line must be '3 a b c'");
    for (int i = 1; i <= 3; ++i) {
      const auto v = parse_count(in, t[i]);
      if (v >= nv) in.fail("vertex index " + std::to_string(v) + " out of range");
      m.cells.push_back(static_cast<std::uint32_t>(v));
    }
  }
  while (in.next(t)) {
    if (t[0] == "ATTRIBUTE") {
      if (t.size() != 4) in.fail("expected 'ATTRIBUTE <name> <dim> <ascii|binary>'");
      check_name(in, t[1]);
      if (m.find(t[1])) in.fail("duplicate attribute '" + t[1] + "'");
      const auto dim = parse_count(in, t[2]);
      if (dim == 0) in.fail("attribute dimension must be positive");
      const auto enc = parse_encoding(in, t[3]);
      m.attributes.push_back({t[1], dim, read_rows(in, nv, dim, enc)});
    } else if (t[0] == "TARGET") {
      if (t.size() != 4) in.fail("expected 'TARGET <vertex|mesh> <dim> <ascii|binary>'");
      if (m.target_kind != TargetKind::kNone) in.fail("duplicate TARGET block");
      if (t[1] == "vertex") {
        m.target_kind = TargetKind::kVertex;
      } else if (t[1] == "mesh") {
        m.target_kind = TargetKind::kMesh;
      } else {
        in.fail("target kind must be 'vertex' or 'mesh'");
      }
      m.target_dim = parse_count(in, t[2]);
      if (m.target_dim == 0) in.fail("target dimension must be positive");
      const auto enc = parse_encoding(in, t[3]);
      m.target = read_rows(in, m.target_kind == TargetKind::kVertex ? nv : 1, m.target_dim, enc);
    } else {
      in.fail("unexpected '" + t[0] + "' (expected ATTRIBUTE or TARGET block)");
    }
  }
  finish(m, source);
  return m;
}

void write_off(std::ostream& os, const MeshSample& m, Encoding enc) {
  if (m.kind != CellKind::kTriangle) throw std::invalid_argument("OFF files hold triangle meshes only");
  const char* e = enc == Encoding::kAscii ? "ascii" : "binary";
  os << "OFF\n" << m.num_vertices() << ' ' << m.num_cells() << " 0\n";
  for (const auto& p : m.positions) os << fmt(p[0]) << ' ' << fmt(p[1]) << ' ' << fmt(p[2]) << '\n';
  for (std::size_t f = 0; f < m.cells.size(); f += 3) {
    os << "3 " << m.cells[f] << ' ' << m.cells[f + 1] << ' ' << m.cells[f + 2] << '\n';
  }
  for (const auto& a : m.attributes) {
    os << "ATTRIBUTE " << a.name << ' ' << a.dim << ' ' << e << '\n';
    write_rows(os, a.values, a.dim, enc);
  }
  if (m.target_kind != TargetKind::kNone) {
    os << "TARGET " << (m.target_kind == TargetKind::kVertex ? "vertex" : "mesh") << ' ' << m.target_dim
       << ' ' << e << '\n';
    write_rows(os, m.target, m.target_dim, enc);
  }
}

// ---------------------------------------------------------------------------

namespace {

// Whitespace token stream over a VTK body with line tracking.
class Tokens {
 public:
  explicit Tokens(Lines& lines) : lines_(lines) {}

  bool peek(std::string& tok) {
    if (!fill()) return false;
    tok = buf_[pos_];
    return true;
  }

  std::string next(const char* what) {
    if (!fill()) lines_.fail(std::string("unexpected end of file, expected ") + what);
    return buf_[pos_++];
  }

  /// Rest of the current line as one string (titles, lookup tables).
  std::vector<std::string> rest_of_line() {
    std::vector<std::string> out(buf_.begin() + static_cast<long>(pos_), buf_.end());
    pos_ = buf_.size();
    return out;
  }

  double number() { return parse_double(lines_, next("number")); }
  std::uint64_t count() { return parse_count(lines_, next("count")); }
  [[noreturn]] void fail(const std::string& what) const { lines_.fail(what); }
  const Lines& lines() const { return lines_; }

 private:
  bool fill() {
    while (pos_ >= buf_.size()) {
      if (!lines_.next(buf_)) return false;
      pos_ = 0;
    }
    return true;
  }

  Lines& lines_;
  std::vector<std::string> buf_;
  std::size_t pos_ = 0;
};

void check_type(Tokens& tk, const std::string& type) {
  static const char* ok[] = {"float", "double", "int", "unsigned_int", "long", "unsigned_long", "short", "unsigned_short", "char", "unsigned_char"};
  for (const char* o : ok) {
    if (type == o) return;
  }
  tk.fail("unsupported data type '" + type + "'");
}

}  // namespace

MeshSample read_vtk(std::istream& is, const std::string& source) {
  Lines lines(is, source, false);
  std::string line;
  if (!lines.raw_line(line) || line.rfind("# vtk DataFile Version", 0) != 0) {
    lines.fail("missing '# vtk DataFile Version' header");
  }
  if (!lines.raw_line(line)) lines.fail("missing title line");
  std::vector<std::string> t = lines.expect("ASCII");
  if (t.size() != 1 || t[0] != "ASCII") lines.fail("only ASCII legacy VTK files are supported");
  Tokens tk(lines);
  if (tk.next("DATASET") != "DATASET") tk.fail("expected DATASET");
  if (tk.next("dataset type") != "UNSTRUCTURED_GRID") tk.fail("only UNSTRUCTURED_GRID datasets are supported");

  MeshSample m;
  bool have_points = false, have_cells = false, have_types = false;
  std::vector<std::uint32_t> flat;
  std::vector<std::uint64_t> offsets;
  std::size_t n = 0;

  auto read_field = [&](bool point_data) {
    tk.next("field name");
    const auto arrays = tk.count();
    for (std::uint64_t a = 0; a < arrays; ++a) {
      const auto name = tk.next("array name");
      check_name(tk.lines(), name);
      const auto dim = tk.count();
      const auto tuples = tk.count();
      check_type(tk, tk.next("data type"));
      if (dim == 0) tk.fail("array '" + name + "' has zero components");
      std::vector<double> values(dim * tuples);
      for (auto& v : values) v = tk.number();
      if (point_data) {
        if (tuples != n) tk.fail("point array '" + name + "' has " + std::to_string(tuples) + " tuples, expected " + std::to_string(n));
        if (name == "target") {
          m.target_kind = TargetKind::kVertex;
          m.target_dim = dim;
          m.target = std::move(values);
        } else {
          if (m.find(name)) tk.fail("duplicate point array '" + name + "'");
          m.attributes.push_back({name, dim, std::move(values)});
        }
      } else {
        if (name != "target" || tuples != 1) {
          tk.fail("dataset field array '" + name + "' is not understood (only a one-tuple 'target')");
        }
        m.target_kind = TargetKind::kMesh;
        m.target_dim = dim;
        m.target = std::move(values);
      }
    }
  };

  std::string key;
  while (tk.peek(key)) {
    tk.next("section");
    if (key == "FIELD") {
      read_field(false);
    } else if (key == "POINTS") {
      n = tk.count();
      check_type(tk, tk.next("data type"));
      m.positions.resize(n);
      for (auto& p : m.positions) {
        for (int i = 0; i < 3; ++i) p[i] = tk.number();
      }
      have_points = true;
    } else if (key == "CELLS") {
      const auto cells = tk.count();
      const auto size = tk.count();
      std::uint64_t used = 0;
      for (std::uint64_t c = 0; c < cells; ++c) {
        const auto k = tk.count();
        offsets.push_back(k);
        used += k + 1;
        for (std::uint64_t i = 0; i < k; ++i) {
          const auto v = tk.count();
          if (!have_points || v >= n) tk.fail("cell " + std::to_string(c) + ": vertex index " + std::to_string(v) + " out of range");
          flat.push_back(static_cast<std::uint32_t>(v));
        }
      }
      if (used != size) tk.fail("CELLS size " + std::to_string(size) + " does not match contents (" + std::to_string(used) + ")");
      have_cells = true;
    } else if (key == "CELL_TYPES") {
      const auto cells = tk.count();
      if (!have_cells || cells != offsets.size()) tk.fail("CELL_TYPES count does not match CELLS");
      int kind = -1;
      for (std::uint64_t c = 0; c < cells; ++c) {
        const auto type = tk.count();
        if (type != 5 && type != 10) tk.fail("unsupported cell type " + std::to_string(type) + " (only 5 triangle, 10 tetra)");
        const auto want = type == 5 ? 3u : 4u;
        if (offsets[c] != want) tk.fail("cell " + std::to_string(c) + " has " + std::to_string(offsets[c]) + " vertices for type " + std::to_string(type));
        if (kind >= 0 && kind != static_cast<int>(type)) tk.fail("mixed cell types (triangles and tetrahedra)");
        kind = static_cast<int>(type);
      }
      m.kind = kind == 10 ? CellKind::kTetrahedron : CellKind::kTriangle;
      m.cells = std::move(flat);
      have_types = true;
    } else if (key == "POINT_DATA") {
      if (!have_points || tk.count() != n) tk.fail("POINT_DATA count does not match POINTS");
      std::string sub;
      while (tk.peek(sub) && (sub == "SCALARS" || sub == "VECTORS" || sub == "NORMALS" || sub == "FIELD")) {
        tk.next("array kind");
        if (sub == "FIELD") {
          read_field(true);
          continue;
        }
        const auto name = tk.next("array name");
        check_name(tk.lines(), name);
        check_type(tk, tk.next("data type"));
        std::size_t dim = 3;
        if (sub == "SCALARS") {
          dim = 1;
          std::string maybe;
          if (tk.peek(maybe) && maybe != "LOOKUP_TABLE") {
            const auto rest = tk.rest_of_line();
            if (rest.size() != 1) tk.fail("malformed SCALARS line");
            dim = parse_count(tk.lines(), rest[0]);
            if (dim == 0 || dim > 4) tk.fail("SCALARS component count must be 1..4");
          }
          if (tk.next("LOOKUP_TABLE") != "LOOKUP_TABLE") tk.fail("expected LOOKUP_TABLE");
          tk.next("lookup table name");
        }
        std::vector<double> values(n * dim);
        for (auto& v : values) v = tk.number();
        if (name == "target") {
          m.target_kind = TargetKind::kVertex;
          m.target_dim = dim;
          m.target = std::move(values);
        } else {
          if (m.find(name)) tk.fail("duplicate point array '" + name + "'");
          m.attributes.push_back({name, dim, std::move(values)});
        }
      }
    } else {
      tk.fail("unsupported section '" + key + "'");
    }
  }
  if (!have_points) lines.fail("no POINTS section");
  if (!have_cells || !have_types) lines.fail("no CELLS / CELL_TYPES section");
  finish(m, source);
  return m;
}

void write_vtk(std::ostream& os, const MeshSample& m) {
  os << "# vtk DataFile Version 3.0\nlabgatr mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  if (m.target_kind == TargetKind::kMesh) {
    os << "FIELD FieldData 1\ntarget " << m.target_dim << " 1 double\n";
    write_rows(os, m.target, m.target_dim, Encoding::kAscii);
  }
  os << "POINTS " << m.num_vertices() << " double\n";
  for (const auto& p : m.positions) os << fmt(p[0]) << ' ' << fmt(p[1]) << ' ' << fmt(p[2]) << '\n';
  const auto k = cell_size(m.kind);
  os << "CELLS " << m.num_cells() << ' ' << m.num_cells() * (k + 1) << '\n';
  for (std::size_t c = 0; c < m.cells.size(); c += k) {
    os << k;
    for (std::size_t i = 0; i < k; ++i) os << ' ' << m.cells[c + i];
    os << '\n';
  }
  os << "CELL_TYPES " << m.num_cells() << '\n';
  for (std::size_t c = 0; c < m.num_cells(); ++c) os << (k == 3 ? 5 : 10) << '\n';
  const std::size_t arrays = m.attributes.size() + (m.target_kind == TargetKind::kVertex ? 1 : 0);
  if (arrays == 0) return;
  os << "POINT_DATA " << m.num_vertices() << "\nFIELD FieldData " << arrays << '\n';
  for (const auto& a : m.attributes) {
    os << a.name << ' ' << a.dim << ' ' << m.num_vertices() << " double\n";
    write_rows(os, a.values, a.dim, Encoding::kAscii);
  }
  if (m.target_kind == TargetKind::kVertex) {
    os << "target " << m.target_dim << ' ' << m.num_vertices() << " double\n";
    write_rows(os, m.target, m.target_dim, Encoding::kAscii);
  }
}

// ---------------------------------------------------------------------------

MeshSample load_mesh(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open mesh file: " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".off" || ext == ".OFF") return read_off(is, path.string());
  if (ext == ".vtk" || ext == ".VTK") return read_vtk(is, path.string());
  throw std::runtime_error("unsupported mesh extension '" + ext + "' (expected .off or .vtk)");
}

void save_mesh(const std::filesystem::path& path, const MeshSample& sample, Encoding encoding) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write mesh file: " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".off") {
    write_off(os, sample, encoding);
  } else if (ext == ".vtk") {
    write_vtk(os, sample);
  } else {
    throw std::runtime_error("unsupported mesh extension '" + ext + "'");
  }
  if (!os) throw std::runtime_error("failed writing mesh file: " + path.string());
}

std::vector<std::filesystem::path> list_mesh_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".off" || ext == ".vtk")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<MeshSample> load_directory(const std::filesystem::path& dir) {
  std::vector<MeshSample> out;
  for (const auto& f : list_mesh_files(dir)) out.push_back(load_mesh(f));
  return out;
}

}  // namespace labgatr::mesh
