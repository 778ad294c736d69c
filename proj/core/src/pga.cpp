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

#include "labgatr/pga.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "labgatr/binary_io.hpp"

namespace labgatr::pga {

std::size_t blade_from_mask(unsigned mask) {
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    if (kBladeMask[i] == mask) return i;
  }
  throw std::logic_error("generator mask " + std::to_string(mask) + " is not a basis blade");
}

Multivector Multivector::scalar(double s) {
  Multivector m;
  m.c_[blade::kScalar] = s;
  return m;
}

Multivector Multivector::basis(std::size_t index, double value) {
  Multivector m;
  m.c_.at(index) = value;
  return m;
}

Multivector& Multivector::operator+=(const Multivector& o) {
  for (std::size_t i = 0; i < kNumBlades; ++i) c_[i] += o.c_[i];
  return *this;
}

Multivector& Multivector::operator-=(const Multivector& o) {
  for (std::size_t i = 0; i < kNumBlades; ++i) c_[i] -= o.c_[i];
  return *this;
}

Multivector& Multivector::operator*=(double s) {
  for (auto& x : c_) x *= s;
  return *this;
}

// ---------------------------------------------------------------------------

namespace {

// Product of two canonical blades given as generator masks. The reordering
// sign counts, for every generator of b, the generators of a with a larger
// index that it has to pass; shared generators then contract with the metric.
CayleyEntry blade_product(unsigned a, unsigned b) {
  int swaps = 0;
  for (unsigned g = 0; g < 4; ++g) {
    if ((b >> g) & 1u) swaps += std::popcount(a >> (g + 1));
  }
  const unsigned common = a & b;
  CayleyEntry e;
  e.blade = static_cast<std::uint8_t>(blade_from_mask(a ^ b));
  e.sign = (common & 1u) ? 0 : static_cast<std::int8_t>((swaps % 2 == 0) ? 1 : -1);
  return e;
}

}  // namespace

CayleyTable build_cayley_table() {
  CayleyTable table{};
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    for (std::size_t j = 0; j < kNumBlades; ++j) {
      table[i][j] = blade_product(kBladeMask[i], kBladeMask[j]);
    }
  }

  if (table[blade::kE0][blade::kE0].sign != 0) {
    throw std::logic_error("cayley table: e0 e0 must vanish");
  }
  for (std::size_t g : {blade::kE1, blade::kE2, blade::kE3}) {
    const auto& e = table[g][g];
    if (e.sign != 1 || e.blade != blade::kScalar) {
      throw std::logic_error("cayley table: ei ei must be 1");
    }
  }
  for (std::size_t i = blade::kE0; i <= blade::kE3; ++i) {
    for (std::size_t j = blade::kE0; j <= blade::kE3; ++j) {
      if (i == j) continue;
      if (table[i][j].blade != table[j][i].blade || table[i][j].sign != -table[j][i].sign) {
        throw std::logic_error("cayley table: generators must anticommute");
      }
    }
  }
  for (std::size_t a = 0; a < kNumBlades; ++a) {
    for (std::size_t b = 0; b < kNumBlades; ++b) {
      const auto ab = table[a][b];
      for (std::size_t c = 0; c < kNumBlades; ++c) {
        const auto bc = table[b][c];
        const auto left = table[ab.blade][c];
        const auto right = table[a][bc.blade];
        const int sl = ab.sign * left.sign;
        const int sr = bc.sign * right.sign;
        if (sl != sr || (sl != 0 && left.blade != right.blade)) {
          throw std::logic_error("cayley table is not associative");
        }
      }
    }
  }
  return table;
}

const CayleyTable& cayley_table() {
  static const CayleyTable table = build_cayley_table();
  return table;
}

Multivector geometric_product(const Multivector& a, const Multivector& b) {
  const auto& table = cayley_table();
  Multivector out;
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < kNumBlades; ++j) {
      const auto e = table[i][j];
      if (e.sign == 0) continue;
      out[e.blade] += e.sign * ai * b[j];
    }
  }
  return out;
}

Multivector grade_project(const Multivector& a, int k) {
  if (k < 0 || k > 4) throw std::out_of_range("grade must be in 0..4, got " + std::to_string(k));
  Multivector out;
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    if (kBladeGrade[i] == k) out[i] = a[i];
  }
  return out;
}

Multivector reverse(const Multivector& a) {
  Multivector out = a;
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    const int k = kBladeGrade[i];
    if ((k * (k - 1) / 2) % 2 != 0) out[i] = -out[i];
  }
  return out;
}

Multivector grade_involution(const Multivector& a) {
  Multivector out = a;
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    if (kBladeGrade[i] % 2 != 0) out[i] = -out[i];
  }
  return out;
}

double inv_norm_sq(const Multivector& a) { return invariant_inner(a, a); }

double invariant_inner(const Multivector& a, const Multivector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    if (!contains_e0(i)) s += a[i] * b[i];
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

struct EmbedVisitor {
  Multivector operator()(const Scalar& s) const { return Multivector::scalar(s.value); }

  Multivector operator()(const Plane& p) const {
    const auto& n = p.normal;
    if (n[0] == 0.0 && n[1] == 0.0 && n[2] == 0.0) {
      throw GeometryError("plane normal must be nonzero");
    }
    Multivector m;
    m[blade::kE0] = p.offset;
    m[blade::kE1] = n[0];
    m[blade::kE2] = n[1];
    m[blade::kE3] = n[2];
    return m;
  }

  Multivector operator()(const Point& p) const {
    const auto& r = p.position;
    Multivector m;
    m[blade::kE012] = r[2];
    m[blade::kE013] = -r[1];
    m[blade::kE023] = r[0];
    m[blade::kE123] = 1.0;
    return m;
  }

  Multivector operator()(const Translation& t) const {
    Multivector m;
    m[blade::kScalar] = 1.0;
    m[blade::kE01] = 0.5 * t.shift[0];
    m[blade::kE02] = 0.5 * t.shift[1];
    m[blade::kE03] = 0.5 * t.shift[2];
    return m;
  }
};

}  // namespace

Multivector embed(const GeometricObject& obj) { return std::visit(EmbedVisitor{}, obj); }

Vec3 extract_point(const Multivector& a, double tolerance) {
  const double w = a[blade::kE123];
  if (!(std::abs(w) > tolerance)) {
    throw DegeneratePointError("point at infinity: |x_123| = " + std::to_string(std::abs(w)));
  }
  return {a[blade::kE023] / w, -a[blade::kE013] / w, a[blade::kE012] / w};
}

Vec3 extract_direction(const Multivector& a) {
  return {a[blade::kE1], a[blade::kE2], a[blade::kE3]};
}

// ---------------------------------------------------------------------------

Versor Versor::rotor(const Vec3& axis, double angle) {
  const double len = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (len == 0.0) throw GeometryError("rotation axis must be nonzero");
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle) / len;
  // cos(angle/2) - sin(angle/2) (n1 e23 + n2 e31 + n3 e12), with e31 = -e13.
  Multivector m;
  m[blade::kScalar] = c;
  m[blade::kE23] = -s * axis[0];
  m[blade::kE13] = s * axis[1];
  m[blade::kE12] = -s * axis[2];
  return Versor(m, false);
}

Versor Versor::translator(const Vec3& shift) {
  return Versor(embed(Translation{shift}), false);
}

Versor Versor::reflection(const Vec3& normal, double offset) {
  const double len = std::sqrt(normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]);
  if (len == 0.0) throw GeometryError("reflection plane normal must be nonzero");
  Multivector m = embed(Plane{normal, offset});
  m *= 1.0 / len;
  return Versor(m, true);
}

Versor Versor::compose(const Versor& inner) const {
  return Versor(geometric_product(mv_, inner.mv_), odd_ != inner.odd_);
}

Versor Versor::inverse() const {
  const double n = inv_norm_sq(mv_);
  if (!(n > 1e-300)) throw GeometryError("versor is not invertible");
  return Versor(reverse(mv_) * (1.0 / n), odd_);
}

Multivector apply_versor(const Versor& v, const Multivector& a) {
  const double n = inv_norm_sq(v.mv());
  if (!(n > 1e-300)) throw GeometryError("versor is not invertible");
  const Multivector x = v.odd() ? grade_involution(a) : a;
  Multivector out = geometric_product(geometric_product(v.mv(), x), reverse(v.mv()));
  if (n != 1.0) out *= 1.0 / n;
  return out;
}

Vec3 apply_to_point(const Versor& v, const Vec3& p) {
  return extract_point(apply_versor(v, embed(Point{p})));
}

Vec3 apply_to_direction(const Versor& v, const Vec3& d) {
  Multivector m;
  m[blade::kE1] = d[0];
  m[blade::kE2] = d[1];
  m[blade::kE3] = d[2];
  return extract_direction(apply_versor(v, m));
}

Versor random_rigid_motion(std::uint64_t seed, bool allow_reflection) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);

  std::array<double, 4> q{};
  double len = 0.0;
  while (len < 1e-6) {
    for (auto& x : q) x = normal(rng);
    len = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  }
  for (auto& x : q) x /= len;
  Multivector r;
  r[blade::kScalar] = q[0];
  r[blade::kE23] = -q[1];
  r[blade::kE13] = q[2];
  r[blade::kE12] = -q[3];
  const Versor rot(r, false);
  const Versor tr = Versor::translator({shift(rng), shift(rng), shift(rng)});

  Versor motion = tr.compose(rot);
  if (allow_reflection) {
    std::bernoulli_distribution coin(0.5);
    const bool reflect = coin(rng);
    Vec3 n{normal(rng), normal(rng), normal(rng)};
    if (reflect) motion = motion.compose(Versor::reflection(n, 0.0));
  }
  return motion;
}

// ---------------------------------------------------------------------------

void write_binary(std::ostream& os, const Multivector& a) {
  for (double x : a.coeffs()) binary::write_le<double>(os, x);
}

Multivector read_binary(std::istream& is) {
  Multivector m;
  for (auto& x : m.coeffs()) x = binary::read_le<double>(is);
  return m;
}

nlohmann::json to_json(const Multivector& a) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumBlades; ++i) j[std::string(kBladeName[i])] = a[i];
  return j;
}

Multivector multivector_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("multivector JSON must be an object");
  Multivector m;
  for (const auto& [key, value] : j.items()) {
    std::size_t index = kNumBlades;
    for (std::size_t i = 0; i < kNumBlades; ++i) {
      if (kBladeName[i] == key) index = i;
    }
    if (index == kNumBlades) throw std::invalid_argument("unknown blade name '" + key + "'");
    m[index] = value.get<double>();
  }
  return m;
}

std::string to_string(const Multivector& a) {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  for (std::size_t i = 0; i < kNumBlades; ++i) {
    if (i) os << ", ";
    os << kBladeName[i] << '=' << a[i];
  }
  os << ']';
  return os.str();
}

}  // namespace labgatr::pga
