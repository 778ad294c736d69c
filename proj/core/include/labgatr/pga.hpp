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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace labgatr::pga {

/// Number of basis blades of G(3,0,1).
inline constexpr std::size_t kNumBlades = 16;

/// Blade indices. This ordering is the storage layout of every multivector in
/// the project (features, checkpoints, plans, JSON):
///
///   s, e0, e1, e2, e3, e01, e02, e03, e12, e13, e23, e012, e013, e023, e123, e0123
namespace blade {
inline constexpr std::size_t kScalar = 0;
inline constexpr std::size_t kE0 = 1;
inline constexpr std::size_t kE1 = 2;
inline constexpr std::size_t kE2 = 3;
inline constexpr std::size_t kE3 = 4;
inline constexpr std::size_t kE01 = 5;
inline constexpr std::size_t kE02 = 6;
inline constexpr std::size_t kE03 = 7;
inline constexpr std::size_t kE12 = 8;
inline constexpr std::size_t kE13 = 9;
inline constexpr std::size_t kE23 = 10;
inline constexpr std::size_t kE012 = 11;
inline constexpr std::size_t kE013 = 12;
inline constexpr std::size_t kE023 = 13;
inline constexpr std::size_t kE123 = 14;
inline constexpr std::size_t kE0123 = 15;
}  // namespace blade

/// Generator bitmask of each blade: bit g is set iff e_g is a factor.
inline constexpr std::array<std::uint8_t, kNumBlades> kBladeMask = {
    0b0000, 0b0001, 0b0010, 0b0100, 0b1000, 0b0011, 0b0101, 0b1001,
    0b0110, 0b1010, 0b1100, 0b0111, 0b1011, 0b1101, 0b1110, 0b1111};

inline constexpr std::array<int, kNumBlades> kBladeGrade = {0, 1, 1, 1, 1, 2, 2, 2,
                                                            2, 2, 2, 3, 3, 3, 3, 4};

inline constexpr std::array<std::string_view, kNumBlades> kBladeName = {
    "s",   "e0",  "e1",   "e2",   "e3",   "e01",  "e02",  "e03",
    "e12", "e13", "e23", "e012", "e013", "e023", "e123", "e0123"};

/// True for the eight blades that contain the degenerate generator e0.
constexpr bool contains_e0(std::size_t index) { return (kBladeMask[index] & 1u) != 0; }

/// Blade index for a generator bitmask.
std::size_t blade_from_mask(unsigned mask);

using Vec3 = std::array<double, 3>;

class Multivector {
 public:
  Multivector() = default;
  explicit Multivector(const std::array<double, kNumBlades>& coeffs) : c_(coeffs) {}

  static Multivector scalar(double s);
  static Multivector basis(std::size_t index, double value = 1.0);

  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }

  const std::array<double, kNumBlades>& coeffs() const { return c_; }
  std::array<double, kNumBlades>& coeffs() { return c_; }

  Multivector& operator+=(const Multivector& o);
  Multivector& operator-=(const Multivector& o);
  Multivector& operator*=(double s);

  friend Multivector operator+(Multivector a, const Multivector& b) { return a += b; }
  friend Multivector operator-(Multivector a, const Multivector& b) { return a -= b; }
  friend Multivector operator*(Multivector a, double s) { return a *= s; }
  friend Multivector operator*(double s, Multivector a) { return a *= s; }
  friend bool operator==(const Multivector&, const Multivector&) = default;

 private:
  std::array<double, kNumBlades> c_{};
};

/// Entry of the blade multiplication table. `sign == 0` means the product is
/// annihilated by e0 e0 = 0.
struct CayleyEntry {
  std::uint8_t blade = 0;
  std::int8_t sign = 0;
};

using CayleyTable = std::array<std::array<CayleyEntry, kNumBlades>, kNumBlades>;

/// Builds the table from e0e0 = 0, eiei = 1 (i = 1..3), eiej = -ejei and the
/// canonical (ascending) generator order of each blade. Throws std::logic_error
/// if a product leaves the basis or the table is not associative.
CayleyTable build_cayley_table();

/// Process-wide table, built on first use (thread-safe static init).
const CayleyTable& cayley_table();

Multivector geometric_product(const Multivector& a, const Multivector& b);

/// Zeroes every component whose grade differs from k. Throws std::out_of_range
/// unless 0 <= k <= 4.
Multivector grade_project(const Multivector& a, int k);

/// Grade k blades are multiplied by (-1)^(k(k-1)/2).
Multivector reverse(const Multivector& a);

/// Grade k blades are multiplied by (-1)^k.
Multivector grade_involution(const Multivector& a);

/// Sum of squares over the blades without e0. Invariant under E(3).
double inv_norm_sq(const Multivector& a);

/// Componentwise pairing over the blades without e0; inv_norm_sq(a) == invariant_inner(a, a).
double invariant_inner(const Multivector& a, const Multivector& b);

// ---------------------------------------------------------------------------
// Geometric objects

struct Scalar {
  double value = 0.0;
};

/// Oriented plane {x : normal . x = offset}. The normal is stored as given.
struct Plane {
  Vec3 normal{};
  double offset = 0.0;
};

struct Point {
  Vec3 position{};
};

struct Translation {
  Vec3 shift{};
};

using GeometricObject = std::variant<Scalar, Plane, Point, Translation>;

/// Thrown by extract_point for points at infinity.
class DegeneratePointError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown for planes with zero normal and for non-invertible versors.
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kPointTolerance = 1e-12;

/// Multivector for a geometric object:
///
///   scalar s          -> x_s = s
///   plane (nu, delta) -> (x_0, x_1, x_2, x_3) = (delta, nu)
///   translation tau   -> (x_s, x_01, x_02, x_03) = (1, tau / 2)
///   point rho         -> (x_012, x_013, x_023, x_123) = (rho_3, -rho_2, rho_1, 1)
///
/// The point layout is the one for which the translator above moves points by
/// tau under the sandwich product, so embedding commutes with rigid motions.
Multivector embed(const GeometricObject& obj);

/// Inverse of the point embedding for any homogeneous representative:
/// (x_023, -x_013, x_012) / x_123. Throws DegeneratePointError when
/// |x_123| <= tolerance.
Vec3 extract_point(const Multivector& a, double tolerance = kPointTolerance);

/// Direction part (x_1, x_2, x_3) of the grade-1 component.
Vec3 extract_direction(const Multivector& a);

// ---------------------------------------------------------------------------
// Versors

/// Even (rotor, translator and products) or odd (reflections) versor.
class Versor {
 public:
  Versor() : mv_(Multivector::scalar(1.0)) {}
  Versor(const Multivector& mv, bool odd) : mv_(mv), odd_(odd) {}

  static Versor identity() { return Versor(); }

  /// Rotation by `angle` (right-handed) about `axis`; axis need not be unit.
  static Versor rotor(const Vec3& axis, double angle);

  /// Translator (1, tau / 2).
  static Versor translator(const Vec3& shift);

  /// Reflection in the plane {x : normal . x = offset}.
  static Versor reflection(const Vec3& normal, double offset = 0.0);

  /// Versor acting as `this` after `inner`.
  Versor compose(const Versor& inner) const;

  /// Versor undoing this one.
  Versor inverse() const;

  const Multivector& mv() const { return mv_; }
  bool odd() const { return odd_; }

 private:
  Multivector mv_;
  bool odd_ = false;
};

/// X -> V X~ V^-1 where X~ is X for even V and the grade involution of X for
/// odd V. Throws GeometryError for non-invertible versors.
Multivector apply_versor(const Versor& v, const Multivector& a);

/// Classical action on a position, through embed/extract.
Vec3 apply_to_point(const Versor& v, const Vec3& p);

/// Linear part of the motion acting on a free direction.
Vec3 apply_to_direction(const Versor& v, const Vec3& d);

/// Uniform random rotation (normalized gaussian quaternion) followed by a
/// translation uniform in [-10, 10]^3. With `allow_reflection`, a reflection
/// in a random plane through the origin is prepended with probability 0.5.
Versor random_rigid_motion(std::uint64_t seed, bool allow_reflection = false);

// ---------------------------------------------------------------------------
// Serialization

/// Writes the 16 coefficients as little-endian f64 values in blade order.
void write_binary(std::ostream& os, const Multivector& a);
Multivector read_binary(std::istream& is);

/// {"s": ..., "e0": ..., ..., "e0123": ...}
nlohmann::json to_json(const Multivector& a);
Multivector multivector_from_json(const nlohmann::json& j);

std::string to_string(const Multivector& a);

}  // namespace labgatr::pga
