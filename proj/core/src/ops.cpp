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

#include "labgatr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "labgatr/pga.hpp"
#include "labgatr/product_kernel.hpp"

namespace labgatr::autodiff {

namespace {

using In = std::span<const Tensor* const>;

void require_same_shape(const Tape& t, Var a, Var b, const char* op) {
  if (t.shape(a) != t.shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(t.shape(a)) + " vs " +
                     shape_string(t.shape(b)));
  }
}

void require_last_axis_16(const Tape& t, Var a, const char* op) {
  const auto& s = t.shape(a);
  if (s.empty() || s.back() != pga::kNumBlades) {
    throw ShapeError(std::string(op) + ": last axis must have 16 blades, got " + shape_string(s));
  }
}

template <typename F, typename D>
Var unary(Tape& t, std::string_view name, Var a, F f, D dfdx) {
  return t.record(
      name, {a},
      [f](In in) {
        Tensor out(in[0]->shape);
        const auto& x = in[0]->data;
        for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = f(x[i]);
        return out;
      },
      [dfdx](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        const auto& x = c.inputs[0]->data;
        for (std::size_t i = 0; i < x.size(); ++i) {
          (*g)[i] += c.grad_output[i] * dfdx(x[i], c.output.data[i]);
        }
      });
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "add");
  return t.record(
      "add", {a, b},
      [](In in) {
        Tensor out = *in[0];
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += in[1]->data[i];
        return out;
      },
      [](const BackwardContext& c) {
        for (auto* g : c.grad_inputs) {
          if (!g) continue;
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i];
        }
      });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "sub");
  return t.record(
      "sub", {a, b},
      [](In in) {
        Tensor out = *in[0];
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= in[1]->data[i];
        return out;
      },
      [](const BackwardContext& c) {
        if (auto* g = c.grad_inputs[0]) {
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i];
        }
        if (auto* g = c.grad_inputs[1]) {
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= c.grad_output[i];
        }
      });
}

Var scale(Tape& t, Var a, double s) {
  return t.record(
      "scale", {a},
      [s](In in) {
        Tensor out = *in[0];
        for (auto& x : out.data) x *= s;
        return out;
      },
      [s](const BackwardContext& c) {
        if (auto* g = c.grad_inputs[0]) {
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += s * c.grad_output[i];
        }
      });
}

Var mul(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "mul");
  return t.record(
      "mul", {a, b},
      [](In in) {
        Tensor out = *in[0];
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= in[1]->data[i];
        return out;
      },
      [](const BackwardContext& c) {
        const auto& x = c.inputs[0]->data;
        const auto& y = c.inputs[1]->data;
        if (auto* g = c.grad_inputs[0]) {
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i] * y[i];
        }
        if (auto* g = c.grad_inputs[1]) {
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i] * x[i];
        }
      });
}

Var matmul(Tape& t, Var a, Var b) {
  const auto& sa = t.shape(a);
  const auto& sb = t.shape(b);
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(sa) + " x " + shape_string(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  return t.record(
      "matmul", {a, b},
      [m, k, n](In in) {
        Tensor out({m, n});
        const double* A = in[0]->data.data();
        const double* B = in[1]->data.data();
        for (std::size_t i = 0; i < m; ++i) {
          double* o = out.data.data() + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            const double* brow = B + p * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += av * brow[j];
          }
        }
        return out;
      },
      [m, k, n](const BackwardContext& c) {
        const double* A = c.inputs[0]->data.data();
        const double* B = c.inputs[1]->data.data();
        const double* G = c.grad_output.data();
        if (auto* ga = c.grad_inputs[0]) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
              (*ga)[i * k + p] += s;
            }
          }
        }
        if (auto* gb = c.grad_inputs[1]) {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double av = A[i * k + p];
              double* row = gb->data() + p * n;
              for (std::size_t j = 0; j < n; ++j) row[j] += av * G[i * n + j];
            }
          }
        }
      });
}

Var sum(Tape& t, Var a) {
  return t.record(
      "sum", {a},
      [](In in) {
        double s = 0.0;
        for (double x : in[0]->data) s += x;
        return Tensor::scalar(s);
      },
      [](const BackwardContext& c) {
        if (auto* g = c.grad_inputs[0]) {
          for (auto& x : *g) x += c.grad_output[0];
        }
      });
}

Var mean(Tape& t, Var a) {
  const double inv = 1.0 / static_cast<double>(t.value(a).size());
  return scale(t, sum(t, a), inv);
}

Var sqrt(Tape& t, Var a) {
  return unary(
      t, "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var reciprocal(Tape& t, Var a) {
  return unary(
      t, "reciprocal", a, [](double x) { return 1.0 / x; },
      [](double, double y) { return -y * y; });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu_value(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_derivative(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double th = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
}

Var gelu(Tape& t, Var a) {
  return unary(
      t, "gelu", a, [](double x) { return gelu_value(x); },
      [](double x, double) { return gelu_derivative(x); });
}

Var softmax(Tape& t, Var a) {
  const auto& s = t.shape(a);
  if (s.empty()) throw ShapeError("softmax: rank-0 input");
  const std::size_t width = s.back();
  const std::size_t rows = t.value(a).size() / width;
  return t.record(
      "softmax", {a},
      [rows, width](In in) {
        Tensor out(in[0]->shape);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* x = in[0]->data.data() + r * width;
          double* y = out.data.data() + r * width;
          const double mx = *std::max_element(x, x + width);
          double z = 0.0;
          for (std::size_t j = 0; j < width; ++j) {
            y[j] = std::exp(x[j] - mx);
            z += y[j];
          }
          for (std::size_t j = 0; j < width; ++j) y[j] /= z;
        }
        return out;
      },
      [rows, width](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = c.output.data.data() + r * width;
          const double* gy = c.grad_output.data() + r * width;
          double dot = 0.0;
          for (std::size_t j = 0; j < width; ++j) dot += y[j] * gy[j];
          for (std::size_t j = 0; j < width; ++j) (*g)[r * width + j] += y[j] * (gy[j] - dot);
        }
      });
}

Var l1_loss(Tape& t, Var pred, Var target) {
  require_same_shape(t, pred, target, "l1_loss");
  const double inv = 1.0 / static_cast<double>(t.value(pred).size());
  return t.record(
      "l1_loss", {pred, target},
      [inv](In in) {
        double s = 0.0;
        for (std::size_t i = 0; i < in[0]->size(); ++i) {
          s += std::abs(in[0]->data[i] - in[1]->data[i]);
        }
        return Tensor::scalar(s * inv);
      },
      [inv](const BackwardContext& c) {
        const auto& p = c.inputs[0]->data;
        const auto& y = c.inputs[1]->data;
        const double g0 = c.grad_output[0] * inv;
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double r = p[i] - y[i];
          const double sgn = (r > 0.0) ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
          if (auto* g = c.grad_inputs[0]) (*g)[i] += g0 * sgn;
          if (auto* g = c.grad_inputs[1]) (*g)[i] -= g0 * sgn;
        }
      });
}

Var cross_entropy(Tape& t, Var logits, std::size_t label) {
  const auto& s = t.shape(logits);
  if (s.size() != 1 || label >= s[0]) throw ShapeError("cross_entropy: expects rank-1 logits");
  return t.record(
      "cross_entropy", {logits},
      [label](In in) {
        const auto& x = in[0]->data;
        const double mx = *std::max_element(x.begin(), x.end());
        double z = 0.0;
        for (double v : x) z += std::exp(v - mx);
        return Tensor::scalar(mx + std::log(z) - x[label]);
      },
      [label](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        const auto& x = c.inputs[0]->data;
        const double mx = *std::max_element(x.begin(), x.end());
        double z = 0.0;
        for (double v : x) z += std::exp(v - mx);
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double p = std::exp(x[i] - mx) / z;
          (*g)[i] += c.grad_output[0] * (p - (i == label ? 1.0 : 0.0));
        }
      });
}

Var reshape(Tape& t, Var a, Shape shape) {
  if (numel(shape) != t.value(a).size()) {
    throw ShapeError("reshape: " + shape_string(t.shape(a)) + " -> " + shape_string(shape));
  }
  return t.record(
      "reshape", {a},
      [shape](In in) { return Tensor(shape, in[0]->data); },
      [](const BackwardContext& c) {
        if (auto* g = c.grad_inputs[0]) {
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c.grad_output[i];
        }
      });
}

namespace {

// outer x extent x inner decomposition of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

Var concat(Tape& t, Var a, Var b, std::size_t axis) {
  const auto& sa = t.shape(a);
  const auto& sb = t.shape(b);
  bool ok = sa.size() == sb.size() && axis < sa.size();
  for (std::size_t i = 0; ok && i < sa.size(); ++i) ok = (i == axis) || sa[i] == sb[i];
  if (!ok) {
    throw ShapeError("concat: incompatible shapes " + shape_string(sa) + ", " + shape_string(sb) +
                     " along axis " + std::to_string(axis));
  }
  Shape so = sa;
  so[axis] += sb[axis];
  const AxisSplit pa = split_axis(sa, axis);
  const AxisSplit pb = split_axis(sb, axis);
  const std::size_t wa = pa.extent * pa.inner, wb = pb.extent * pb.inner;
  return t.record(
      "concat", {a, b},
      [so, pa, wa, wb](In in) {
        Tensor out(so);
        for (std::size_t o = 0; o < pa.outer; ++o) {
          std::copy_n(in[0]->data.data() + o * wa, wa, out.data.data() + o * (wa + wb));
          std::copy_n(in[1]->data.data() + o * wb, wb, out.data.data() + o * (wa + wb) + wa);
        }
        return out;
      },
      [pa, wa, wb](const BackwardContext& c) {
        for (std::size_t o = 0; o < pa.outer; ++o) {
          const double* go = c.grad_output.data() + o * (wa + wb);
          if (auto* g = c.grad_inputs[0]) {
            for (std::size_t i = 0; i < wa; ++i) (*g)[o * wa + i] += go[i];
          }
          if (auto* g = c.grad_inputs[1]) {
            for (std::size_t i = 0; i < wb; ++i) (*g)[o * wb + i] += go[wa + i];
          }
        }
      });
}

Var slice(Tape& t, Var a, std::size_t axis, std::size_t begin, std::size_t count) {
  const auto& sa = t.shape(a);
  if (axis >= sa.size() || begin + count > sa[axis] || count == 0) {
    throw ShapeError("slice: range out of bounds for " + shape_string(sa));
  }
  Shape so = sa;
  so[axis] = count;
  const AxisSplit p = split_axis(sa, axis);
  return t.record(
      "slice", {a},
      [so, p, begin, count](In in) {
        Tensor out(so);
        const std::size_t w = count * p.inner;
        for (std::size_t o = 0; o < p.outer; ++o) {
          std::copy_n(in[0]->data.data() + (o * p.extent + begin) * p.inner, w,
                      out.data.data() + o * w);
        }
        return out;
      },
      [p, begin, count](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        const std::size_t w = count * p.inner;
        for (std::size_t o = 0; o < p.outer; ++o) {
          double* dst = g->data() + (o * p.extent + begin) * p.inner;
          const double* src = c.grad_output.data() + o * w;
          for (std::size_t i = 0; i < w; ++i) dst[i] += src[i];
        }
      });
}

Var gather_rows(Tape& t, Var a, std::vector<std::uint32_t> index) {
  const auto& sa = t.shape(a);
  if (sa.empty()) throw ShapeError("gather_rows: rank-0 input");
  for (auto i : index) {
    if (i >= sa[0]) throw ShapeError("gather_rows: index out of range");
  }
  Shape so = sa;
  so[0] = index.size();
  const std::size_t w = t.value(a).size() / sa[0];
  return t.record(
      "gather_rows", {a},
      [so, w, index](In in) {
        Tensor out(so);
        for (std::size_t r = 0; r < index.size(); ++r) {
          std::copy_n(in[0]->data.data() + index[r] * w, w, out.data.data() + r * w);
        }
        return out;
      },
      [w, index](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        for (std::size_t r = 0; r < index.size(); ++r) {
          double* dst = g->data() + index[r] * w;
          const double* src = c.grad_output.data() + r * w;
          for (std::size_t i = 0; i < w; ++i) dst[i] += src[i];
        }
      });
}

Var mean_rows(Tape& t, Var a) {
  const auto& sa = t.shape(a);
  if (sa.empty() || sa[0] == 0) throw ShapeError("mean_rows: empty input");
  Shape so = sa;
  so[0] = 1;
  const std::size_t n = sa[0];
  const std::size_t w = t.value(a).size() / n;
  return t.record(
      "mean_rows", {a},
      [so, n, w](In in) {
        Tensor out(so);
        for (std::size_t r = 0; r < n; ++r) {
          const double* src = in[0]->data.data() + r * w;
          for (std::size_t i = 0; i < w; ++i) out.data[i] += src[i];
        }
        for (auto& x : out.data) x /= static_cast<double>(n);
        return out;
      },
      [n, w](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t i = 0; i < w; ++i) (*g)[r * w + i] += inv * c.grad_output[i];
        }
      });
}

Var scatter_mean(Tape& t, Var a, std::vector<std::uint32_t> group, std::size_t n_groups) {
  const auto& sa = t.shape(a);
  if (sa.empty() || group.size() != sa[0]) {
    throw ShapeError("scatter_mean: need one group id per row of " + shape_string(sa));
  }
  std::vector<double> counts(n_groups, 0.0);
  for (auto g : group) {
    if (g >= n_groups) throw ShapeError("scatter_mean: group id out of range");
    counts[g] += 1.0;
  }
  for (std::size_t g = 0; g < n_groups; ++g) {
    if (counts[g] == 0.0) {
      throw std::logic_error("scatter_mean: group " + std::to_string(g) + " has no members");
    }
  }
  Shape so = sa;
  so[0] = n_groups;
  const std::size_t w = t.value(a).size() / sa[0];
  return t.record(
      "scatter_mean", {a},
      [so, w, group, counts](In in) {
        Tensor out(so);
        for (std::size_t r = 0; r < group.size(); ++r) {
          double* dst = out.data.data() + group[r] * w;
          const double* src = in[0]->data.data() + r * w;
          for (std::size_t i = 0; i < w; ++i) dst[i] += src[i];
        }
        for (std::size_t g = 0; g < counts.size(); ++g) {
          for (std::size_t i = 0; i < w; ++i) out.data[g * w + i] /= counts[g];
        }
        return out;
      },
      [w, group, counts](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        for (std::size_t r = 0; r < group.size(); ++r) {
          const double inv = 1.0 / counts[group[r]];
          const double* src = c.grad_output.data() + group[r] * w;
          for (std::size_t i = 0; i < w; ++i) (*g)[r * w + i] += inv * src[i];
        }
      });
}

Var weighted_gather(Tape& t, Var a, std::vector<std::uint32_t> neighbor,
                    std::vector<double> weight, std::size_t k) {
  const auto& sa = t.shape(a);
  if (sa.empty() || k == 0 || neighbor.size() != weight.size() || neighbor.size() % k != 0) {
    throw ShapeError("weighted_gather: inconsistent neighbor table");
  }
  for (auto i : neighbor) {
    if (i >= sa[0]) throw ShapeError("weighted_gather: neighbor index out of range");
  }
  const std::size_t rows = neighbor.size() / k;
  Shape so = sa;
  so[0] = rows;
  const std::size_t w = t.value(a).size() / sa[0];
  return t.record(
      "weighted_gather", {a},
      [so, w, k, rows, neighbor, weight](In in) {
        Tensor out(so);
        for (std::size_t r = 0; r < rows; ++r) {
          double* dst = out.data.data() + r * w;
          for (std::size_t j = 0; j < k; ++j) {
            const double wt = weight[r * k + j];
            const double* src = in[0]->data.data() + neighbor[r * k + j] * w;
            for (std::size_t i = 0; i < w; ++i) dst[i] += wt * src[i];
          }
        }
        return out;
      },
      [w, k, rows, neighbor, weight](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* src = c.grad_output.data() + r * w;
          for (std::size_t j = 0; j < k; ++j) {
            const double wt = weight[r * k + j];
            double* dst = g->data() + neighbor[r * k + j] * w;
            for (std::size_t i = 0; i < w; ++i) dst[i] += wt * src[i];
          }
        }
      });
}

Var geometric_product(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "geometric_product");
  require_last_axis_16(t, a, "geometric_product");
  return t.record(
      "geometric_product", {a, b},
      [](In in) {
        Tensor out(in[0]->shape);
        const std::size_t n = out.size() / pga::kNumBlades;
        for (std::size_t r = 0; r < n; ++r) {
          pga::kernel::product(in[0]->data.data() + 16 * r, in[1]->data.data() + 16 * r,
                          out.data.data() + 16 * r);
        }
        return out;
      },
      [](const BackwardContext& c) {
        const std::size_t n = c.output.size() / pga::kNumBlades;
        auto* ga = c.grad_inputs[0];
        auto* gb = c.grad_inputs[1];
        for (std::size_t r = 0; r < n; ++r) {
          const double* x = c.inputs[0]->data.data() + 16 * r;
          const double* y = c.inputs[1]->data.data() + 16 * r;
          const double* go = c.grad_output.data() + 16 * r;
          pga::kernel::product_vjp(x, y, go, ga ? ga->data() + 16 * r : nullptr,
                              gb ? gb->data() + 16 * r : nullptr);
        }
      });
}

Var grade_project(Tape& t, Var a, int k) {
  require_last_axis_16(t, a, "grade_project");
  if (k < 0 || k > 4) throw std::out_of_range("grade_project: grade must be in 0..4");
  return t.record(
      "grade_project", {a},
      [k](In in) {
        Tensor out(in[0]->shape);
        for (std::size_t i = 0; i < out.size(); ++i) {
          if (pga::kBladeGrade[i % 16] == k) out.data[i] = in[0]->data[i];
        }
        return out;
      },
      [k](const BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        for (std::size_t i = 0; i < g->size(); ++i) {
          if (pga::kBladeGrade[i % 16] == k) (*g)[i] += c.grad_output[i];
        }
      });
}

}  // namespace labgatr::autodiff
