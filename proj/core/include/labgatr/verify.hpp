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

#include "labgatr/model.hpp"

// Self-checks run by `labgatr selftest` and `labgatr verify`.
namespace labgatr::verify {

struct Check {
  std::string name;
  double value = 0.0;      // measured error
  double threshold = 0.0;  // pass iff value < threshold (or == 0 for exact checks)
  bool passed = false;
  double seconds = 0.0;
  std::string detail;
};

/// Exhaustive basis associativity, generator axioms and 1,000 random products
/// against a bit-twiddling sign rule. Exact for the table, 1e-14 relative for
/// products.
Check algebra(std::uint64_t seed, std::size_t pairs = 1000);

/// Point embed/extract roundtrips (1e-12) and translator action vs vector
/// addition (1e-10).
Check embeddings(std::uint64_t seed, std::size_t trials = 1000);

/// Convex combinations of up to 6 scaled points: extraction equals the
/// reweighted average (1e-10) and the reweighting is a certificate of hull
/// membership.
Check convex_combinations(std::uint64_t seed, std::size_t trials = 1000);

struct EquivarianceOptions {
  std::size_t blocks = 4;
  std::size_t tokens = 16;
  std::size_t channels = 8;
  std::size_t heads = 4;
  std::size_t motions = 20;  // every other motion includes a reflection
  std::uint64_t seed = 0;
};

/// Max relative deviation |f(gX) - g f(X)| / |g f(X)| over every layer type
/// and a stack of transformer blocks; threshold 1e-7.
Check layer_equivariance(const EquivarianceOptions& options);

/// Same for the whole model with a vertex-level vector output; threshold 1e-5.
Check model_equivariance(const EquivarianceOptions& options);

/// grad_check (eps 1e-5) over the input and parameters of every layer type;
/// normwise relative error per array, threshold 1e-4.
Check layer_gradients(std::uint64_t seed);

/// End-to-end L1 objective at `points` random parameter/input points.
Check model_gradients(std::uint64_t seed, std::size_t points = 5);

/// One line per check: "PASS|FAIL name value < threshold (seconds) detail".
std::string format(const Check& c);

}  // namespace labgatr::verify
