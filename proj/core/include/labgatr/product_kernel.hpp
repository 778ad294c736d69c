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
#include <cstdint>

#include "labgatr/pga.hpp"

// Raw-pointer geometric product used by the tensor ops. The 192 nonvanishing
// (i, j) -> k terms of the Cayley table are flattened once.
namespace labgatr::pga::kernel {

struct ProductTerm {
  std::uint8_t i, j, k;
  double sign;
};

struct ProductTerms {
  std::array<ProductTerm, 192> terms{};
  std::size_t count = 0;
};

inline const ProductTerms& product_terms() {
  static const ProductTerms t = [] {
    ProductTerms r;
    const auto& table = cayley_table();
    for (std::uint8_t i = 0; i < kNumBlades; ++i) {
      for (std::uint8_t j = 0; j < kNumBlades; ++j) {
        const auto e = table[i][j];
        if (e.sign == 0) continue;
        r.terms.at(r.count++) = ProductTerm{i, j, e.blade, static_cast<double>(e.sign)};
      }
    }
    return r;
  }();
  return t;
}

/// out = a b (out is overwritten).
inline void product(const double* a, const double* b, double* out) {
  const auto& t = product_terms();
  double acc[kNumBlades] = {};
  for (std::size_t n = 0; n < t.count; ++n) {
    const auto& p = t.terms[n];
    acc[p.k] += p.sign * a[p.i] * b[p.j];
  }
  for (std::size_t n = 0; n < kNumBlades; ++n) out[n] = acc[n];
}

/// Accumulates the vector-Jacobian product of (a, b) -> a b for output
/// gradient g into ga and gb (either may be null).
inline void product_vjp(const double* a, const double* b, const double* g, double* ga,
                        double* gb) {
  const auto& t = product_terms();
  for (std::size_t n = 0; n < t.count; ++n) {
    const auto& p = t.terms[n];
    const double sg = p.sign * g[p.k];
    if (ga) ga[p.i] += sg * b[p.j];
    if (gb) gb[p.j] += sg * a[p.i];
  }
}

}  // namespace labgatr::pga::kernel
