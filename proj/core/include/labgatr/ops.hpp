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
#include <span>
#include <vector>

#include "labgatr/autodiff.hpp"

// Differentiable primitives. Each records one node with an exact
// vector-Jacobian product; shapes are validated eagerly and mismatches throw
// ShapeError.
namespace labgatr::autodiff {

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var mul(Tape& t, Var a, Var b);

/// [m, k] x [k, n] -> [m, n]
Var matmul(Tape& t, Var a, Var b);

Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);
Var sqrt(Tape& t, Var a);
Var reciprocal(Tape& t, Var a);

/// tanh approximation 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
Var gelu(Tape& t, Var a);
double gelu_value(double x);
double gelu_derivative(double x);

/// Softmax over the last axis.
Var softmax(Tape& t, Var a);

/// mean |pred - target|; the subgradient at a zero residual is 0.
Var l1_loss(Tape& t, Var pred, Var target);

/// -log softmax(logits)[label] for a rank-1 logit vector.
Var cross_entropy(Tape& t, Var logits, std::size_t label);

Var reshape(Tape& t, Var a, Shape shape);

/// Concatenation along `axis`; all other extents must agree.
Var concat(Tape& t, Var a, Var b, std::size_t axis);

/// `count` entries of `axis` starting at `begin`.
Var slice(Tape& t, Var a, std::size_t axis, std::size_t begin, std::size_t count);

/// Rows (axis 0) picked by index.
Var gather_rows(Tape& t, Var a, std::vector<std::uint32_t> index);

/// Mean over axis 0, keeping a leading extent of 1.
Var mean_rows(Tape& t, Var a);

/// out[g] = mean of rows r with group[r] == g. Every group must be nonempty.
Var scatter_mean(Tape& t, Var a, std::vector<std::uint32_t> group, std::size_t n_groups);

/// out[v] = sum_j weight[v k + j] a[neighbor[v k + j]] over rows of `a`.
Var weighted_gather(Tape& t, Var a, std::vector<std::uint32_t> neighbor,
                    std::vector<double> weight, std::size_t k);

/// Geometric product along the last axis (length 16) of two equally shaped
/// tensors.
Var geometric_product(Tape& t, Var a, Var b);

/// Grade projection along the last axis (length 16).
Var grade_project(Tape& t, Var a, int k);

}  // namespace labgatr::autodiff
