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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace labgatr::autodiff {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(numel(shape), 0.0) {}
  Tensor(Shape s, std::vector<double> d);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
};

/// Handle to a node on a Tape.
struct Var {
  static constexpr std::uint32_t kInvalid = 0xffffffffu;
  std::uint32_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

/// Inputs handed to a node's vector-Jacobian product. `grad_inputs[i]` is null
/// when input i does not need a gradient; otherwise it is a zero-initialized
/// (or previously accumulated) buffer of the input's size to add into.
struct BackwardContext {
  std::span<const Tensor* const> inputs;
  const Tensor& output;
  std::span<const double> grad_output;
  std::span<std::vector<double>* const> grad_inputs;
};

/// Append-only record of a computation for reverse-mode differentiation.
///
/// Nodes are stored in creation order, which is a topological order because a
/// node can only reference nodes that already exist. backward() walks the
/// list once in reverse and accumulates gradients additively.
class Tape {
 public:
  using ForwardFn = std::function<Tensor(std::span<const Tensor* const>)>;
  using BackwardFn = std::function<void(const BackwardContext&)>;

  /// Leaf without gradient (data, targets, fixed geometry).
  Var constant(Tensor value);
  /// Leaf whose gradient is tracked.
  Var variable(Tensor value);

  /// Records `op` on `inputs`. The forward value is computed immediately.
  Var record(std::string_view op, std::span<const Var> inputs, const ForwardFn& forward,
             BackwardFn backward);
  Var record(std::string_view op, std::initializer_list<Var> inputs, const ForwardFn& forward,
             BackwardFn backward) {
    return record(op, std::span<const Var>(inputs.begin(), inputs.size()), forward,
                  std::move(backward));
  }

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape; }
  bool requires_grad(Var v) const;
  std::string_view op(Var v) const;

  /// Gradient accumulated at `v` by the last backward(); empty if none reached it.
  std::span<const double> grad(Var v) const;

  /// Seeds d(root)/d(root) = 1; root must hold a single value.
  void backward(Var root);
  /// Seeds the root gradient with `seed` (same size as root).
  void backward(Var root, std::span<const double> seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string op;
    std::vector<Var> inputs;
    Tensor value;
    std::vector<double> grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

/// Result of comparing reverse-mode and central finite-difference gradients.
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  /// max_i |g_ad - g_fd| and that divided by max_i max(|g_ad|, |g_fd|).
  double max_abs_error = 0.0;
  double normwise_error = 0.0;
};

/// Scalar-valued function of one tracked input, recorded on the given tape.
using ScalarFn = std::function<Var(Tape&, Var)>;

/// Compares the gradient of `fn` at `point` against central differences with
/// step `epsilon`; per component the error is
/// |g_ad - g_fd| / (1e-8 + |g_ad| + |g_fd|). Throws std::domain_error if a
/// forward value is not finite.
GradCheckResult grad_check(const ScalarFn& fn, const Tensor& point, double epsilon = 1e-5);

}  // namespace labgatr::autodiff
