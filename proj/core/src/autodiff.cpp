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

#include "labgatr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace labgatr::autodiff {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor of shape " + shape_string(shape) + " cannot hold " +
                     std::to_string(data.size()) + " values");
  }
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::variable(Tensor value) {
  Node n;
  n.op = "variable";
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(std::string_view op, std::span<const Var> inputs, const ForwardFn& forward,
                 BackwardFn backward) {
  std::vector<const Tensor*> in;
  in.reserve(inputs.size());
  bool needs_grad = false;
  for (Var v : inputs) {
    const Node& src = node(v);
    in.push_back(&src.value);
    needs_grad = needs_grad || src.requires_grad;
  }
  Node n;
  n.op = std::string(op);
  n.inputs.assign(inputs.begin(), inputs.end());
  n.value = forward(std::span<const Tensor* const>(in.data(), in.size()));
  n.requires_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("variable is not on this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

std::string_view Tape::op(Var v) const { return node(v).op; }

std::span<const double> Tape::grad(Var v) const { return node(v).grad; }

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    throw ShapeError("backward() without seed needs a single-valued root, got " +
                     shape_string(value(root).shape));
  }
  const double one = 1.0;
  backward(root, std::span<const double>(&one, 1));
}

void Tape::backward(Var root, std::span<const double> seed) {
  Node& r = nodes_.at(root.id);
  if (seed.size() != r.value.size()) throw ShapeError("backward seed size mismatch");
  for (auto& n : nodes_) n.grad.clear();
  r.grad.assign(seed.begin(), seed.end());

  std::vector<const Tensor*> in;
  std::vector<std::vector<double>*> gin;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.backward) continue;
    in.clear();
    gin.clear();
    for (Var v : n.inputs) {
      Node& src = nodes_[v.id];
      in.push_back(&src.value);
      if (src.requires_grad) {
        if (src.grad.empty()) src.grad.assign(src.value.size(), 0.0);
        gin.push_back(&src.grad);
      } else {
        gin.push_back(nullptr);
      }
    }
    BackwardContext ctx{std::span<const Tensor* const>(in.data(), in.size()), n.value, n.grad,
                        std::span<std::vector<double>* const>(gin.data(), gin.size())};
    n.backward(ctx);
  }
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const ScalarFn& fn, const Tensor& point, double epsilon) {
  auto evaluate = [&](const Tensor& x) {
    Tape tape;
    Var in = tape.constant(x);
    Var out = fn(tape, in);
    const auto& v = tape.value(out);
    if (v.size() != 1) throw ShapeError("grad_check needs a scalar-valued function");
    if (!std::isfinite(v.data[0])) throw std::domain_error("grad_check: non-finite forward value");
    return v.data[0];
  };

  Tape tape;
  Var in = tape.variable(point);
  Var out = fn(tape, in);
  if (tape.value(out).size() != 1) throw ShapeError("grad_check needs a scalar-valued function");
  if (!std::isfinite(tape.value(out).data[0])) {
    throw std::domain_error("grad_check: non-finite forward value");
  }
  tape.backward(out);
  std::vector<double> analytic(point.size(), 0.0);
  const auto g = tape.grad(in);
  if (!g.empty()) analytic.assign(g.begin(), g.end());

  GradCheckResult result;
  double scale = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double x0 = point.data[i];
    probe.data[i] = x0 + epsilon;
    const double fp = evaluate(probe);
    probe.data[i] = x0 - epsilon;
    const double fm = evaluate(probe);
    probe.data[i] = x0;
    const double numeric = (fp - fm) / (2.0 * epsilon);
    const double err =
        std::abs(analytic[i] - numeric) / (1e-8 + std::abs(analytic[i]) + std::abs(numeric));
    if (i == 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
      result.analytic = analytic[i];
      result.numeric = numeric;
    }
    result.max_abs_error = std::max(result.max_abs_error, std::abs(analytic[i] - numeric));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric)});
  }
  result.normwise_error = scale > 0.0 ? result.max_abs_error / scale : 0.0;
  return result;
}

}  // namespace labgatr::autodiff
