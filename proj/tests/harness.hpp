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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "labgatr/autodiff.hpp"
#include "labgatr/ops.hpp"
#include "labgatr/parameters.hpp"

namespace testing_harness {

namespace ad = labgatr::autodiff;

inline ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ad::Tensor t(std::move(shape));
  for (auto& x : t.data) x = u(rng);
  return t;
}

/// max |a - b| / max |b|.
inline double relative_deviation(const ad::Tensor& a, const ad::Tensor& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    num = std::max(num, std::abs(a.data[i] - b.data[i]));
    den = std::max(den, std::abs(b.data[i]));
  }
  return den > 0.0 ? num / den : num;
}

/// Binds every parameter as a constant except `live`, which is `v`.
inline ad::Bindings bind_except(ad::Tape& t, const ad::ParameterStore& store,
                                const std::string& live, ad::Var v) {
  ad::Bindings b;
  for (const auto& [name, a] : store.arrays()) {
    b.set(name, name == live ? v : t.constant(ad::Tensor(a.shape, a.value)));
  }
  return b;
}

inline ad::Bindings bind_constants(ad::Tape& t, const ad::ParameterStore& store) {
  return bind_except(t, store, "", ad::Var{});
}

/// Contracts y with fixed pseudo-random weights into a scalar.
inline ad::Var readout(ad::Tape& t, ad::Var y, std::uint64_t seed = 77) {
  std::mt19937_64 rng(seed);
  auto w = random_tensor(t.shape(y), rng);
  return ad::sum(t, ad::mul(t, y, t.constant(std::move(w))));
}

/// Worst gradient-check error over the input and every parameter array of a
/// layer given as out = f(tape, bindings, x).
using LayerFn = std::function<ad::Var(ad::Tape&, const ad::Bindings&, ad::Var)>;

inline double layer_grad_error(const LayerFn& f, const ad::ParameterStore& store,
                               const ad::Tensor& x) {
  double worst = 0.0;
  auto on_input = [&](ad::Tape& t, ad::Var v) {
    return readout(t, f(t, bind_constants(t, store), v));
  };
  worst = std::max(worst, ad::grad_check(on_input, x).max_rel_error);
  for (const auto& [name, a] : store.arrays()) {
    auto on_param = [&, name = name](ad::Tape& t, ad::Var v) {
      return readout(t, f(t, bind_except(t, store, name, v), t.constant(x)));
    };
    worst = std::max(worst, ad::grad_check(on_param, ad::Tensor(a.shape, a.value)).max_rel_error);
  }
  return worst;
}

}  // namespace testing_harness
