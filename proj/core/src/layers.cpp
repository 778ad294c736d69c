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

#include "labgatr/layers.hpp"

#include <array>
#include <cmath>

#include "labgatr/ops.hpp"

namespace labgatr::layers {

namespace ad = labgatr::autodiff;
using In = std::span<const Tensor* const>;
using pga::kNumBlades;

namespace {

// e0 <x>_k as a blade map: for every e0-free blade of grade <= 3, the blade
// it lands on and the sign of e0 * blade.
struct E0Shift {
  std::array<std::uint8_t, 8> source{};
  std::array<std::uint8_t, 8> target{};
  std::array<double, 8> sign{};
  std::array<std::uint8_t, 8> source_grade{};
  std::size_t count = 0;
};

const E0Shift& e0_shift() {
  static const E0Shift s = [] {
    E0Shift r;
    const auto& table = pga::cayley_table();
    for (std::uint8_t b = 0; b < kNumBlades; ++b) {
      if (pga::contains_e0(b) || pga::kBladeGrade[b] > 3) continue;
      const auto e = table[pga::blade::kE0][b];
      r.source[r.count] = b;
      r.target[r.count] = e.blade;
      r.sign[r.count] = e.sign;
      r.source_grade[r.count] = static_cast<std::uint8_t>(pga::kBladeGrade[b]);
      ++r.count;
    }
    return r;
  }();
  return s;
}

constexpr std::array<std::uint8_t, kInvariantBlades> kInvariant = {
    pga::blade::kScalar, pga::blade::kE1,  pga::blade::kE2,  pga::blade::kE3,
    pga::blade::kE12,    pga::blade::kE13, pga::blade::kE23, pga::blade::kE123};

// Fills xs (ci x 16) with e0 <x>_k for all k, zero elsewhere.
void shift_e0(const double* x, std::size_t ci, double* xs) {
  const auto& s = e0_shift();
  std::fill(xs, xs + ci * kNumBlades, 0.0);
  for (std::size_t i = 0; i < ci; ++i) {
    for (std::size_t n = 0; n < s.count; ++n) {
      xs[i * kNumBlades + s.target[n]] = s.sign[n] * x[i * kNumBlades + s.source[n]];
    }
  }
}

}  // namespace

Tensor make_features(std::size_t tokens, std::size_t channels) {
  return Tensor({tokens, channels, kNumBlades});
}

void check_feature_shape(const Shape& shape, const char* what) {
  if (shape.size() != 3 || shape[0] == 0 || shape[1] == 0 || shape[2] != kNumBlades) {
    throw ad::ShapeError(std::string(what) + ": expected feature tensor [n, c, 16], got " +
                         ad::shape_string(shape));
  }
}

Tensor transform_features(const Tensor& x, const pga::Versor& g) {
  if (x.shape.empty() || x.shape.back() != kNumBlades) {
    throw ad::ShapeError("transform_features: last axis must be 16");
  }
  Tensor out(x.shape);
  const std::size_t n = x.size() / kNumBlades;
  for (std::size_t r = 0; r < n; ++r) {
    pga::Multivector m;
    std::copy_n(x.data.data() + r * kNumBlades, kNumBlades, m.coeffs().data());
    const auto y = pga::apply_versor(g, m);
    std::copy_n(y.coeffs().data(), kNumBlades, out.data.data() + r * kNumBlades);
  }
  return out;
}

// ---------------------------------------------------------------------------

Var equi_linear(Tape& t, Var x, Var alpha, Var beta, Var bias) {
  const auto& sx = t.shape(x);
  check_feature_shape(sx, "equi_linear");
  const auto& sa = t.shape(alpha);
  const auto& sb = t.shape(beta);
  if (sa.size() != 3 || sa[1] != sx[1] || sa[2] != 5 || sb != Shape{sa[0], sa[1], 4}) {
    throw ad::ShapeError("equi_linear: parameter shapes " + ad::shape_string(sa) + ", " +
                         ad::shape_string(sb) + " do not fit input " + ad::shape_string(sx));
  }
  const std::size_t n = sx[0], ci = sx[1], co = sa[0];
  const bool has_bias = bias.valid();
  if (has_bias && t.shape(bias) != Shape{co}) throw ad::ShapeError("equi_linear: bias shape");

  std::vector<Var> inputs{x, alpha, beta};
  if (has_bias) inputs.push_back(bias);

  // Expands alpha / beta to per-blade weights [co, ci, 16].
  auto expand = [co, ci](const Tensor& a, const Tensor& b, std::vector<double>& wa,
                         std::vector<double>& wb) {
    const auto& s = e0_shift();
    wa.assign(co * ci * kNumBlades, 0.0);
    wb.assign(co * ci * kNumBlades, 0.0);
    for (std::size_t p = 0; p < co * ci; ++p) {
      for (std::size_t bl = 0; bl < kNumBlades; ++bl) {
        wa[p * kNumBlades + bl] = a.data[p * 5 + pga::kBladeGrade[bl]];
      }
      for (std::size_t m = 0; m < s.count; ++m) {
        wb[p * kNumBlades + s.target[m]] = b.data[p * 4 + s.source_grade[m]];
      }
    }
  };

  return t.record(
      "equi_linear", inputs,
      [n, ci, co, has_bias, expand](In in) {
        std::vector<double> wa, wb;
        expand(*in[1], *in[2], wa, wb);
        Tensor out({n, co, kNumBlades});
        std::vector<double> xs(ci * kNumBlades);
        for (std::size_t tok = 0; tok < n; ++tok) {
          const double* xt = in[0]->data.data() + tok * ci * kNumBlades;
          shift_e0(xt, ci, xs.data());
          for (std::size_t o = 0; o < co; ++o) {
            double acc[kNumBlades] = {};
            for (std::size_t i = 0; i < ci; ++i) {
              const double* a = wa.data() + (o * ci + i) * kNumBlades;
              const double* b = wb.data() + (o * ci + i) * kNumBlades;
              const double* xi = xt + i * kNumBlades;
              const double* si = xs.data() + i * kNumBlades;
              for (std::size_t bl = 0; bl < kNumBlades; ++bl) acc[bl] += a[bl] * xi[bl] + b[bl] * si[bl];
            }
            if (has_bias) acc[0] += in[3]->data[o];
            std::copy_n(acc, kNumBlades, out.data.data() + (tok * co + o) * kNumBlades);
          }
        }
        return out;
      },
      [n, ci, co, has_bias, expand](const ad::BackwardContext& c) {
        std::vector<double> wa, wb;
        expand(*c.inputs[1], *c.inputs[2], wa, wb);
        auto* gx = c.grad_inputs[0];
        auto* galpha = c.grad_inputs[1];
        auto* gbeta = c.grad_inputs[2];
        const bool need_w = galpha || gbeta;
        std::vector<double> da(need_w ? co * ci * kNumBlades : 0, 0.0);
        std::vector<double> db(need_w ? co * ci * kNumBlades : 0, 0.0);
        std::vector<double> xs(ci * kNumBlades), dxl(ci * kNumBlades), dxs(ci * kNumBlades);
        const auto& shift = e0_shift();
        for (std::size_t tok = 0; tok < n; ++tok) {
          const double* xt = c.inputs[0]->data.data() + tok * ci * kNumBlades;
          const double* gy = c.grad_output.data() + tok * co * kNumBlades;
          shift_e0(xt, ci, xs.data());
          std::fill(dxl.begin(), dxl.end(), 0.0);
          std::fill(dxs.begin(), dxs.end(), 0.0);
          for (std::size_t o = 0; o < co; ++o) {
            const double* g = gy + o * kNumBlades;
            for (std::size_t i = 0; i < ci; ++i) {
              const std::size_t p = (o * ci + i) * kNumBlades;
              const double* xi = xt + i * kNumBlades;
              const double* si = xs.data() + i * kNumBlades;
              double* dxi = dxl.data() + i * kNumBlades;
              double* dsi = dxs.data() + i * kNumBlades;
              for (std::size_t bl = 0; bl < kNumBlades; ++bl) {
                dxi[bl] += wa[p + bl] * g[bl];
                dsi[bl] += wb[p + bl] * g[bl];
              }
              if (need_w) {
                for (std::size_t bl = 0; bl < kNumBlades; ++bl) {
                  da[p + bl] += g[bl] * xi[bl];
                  db[p + bl] += g[bl] * si[bl];
                }
              }
            }
          }
          if (gx) {
            double* dst = gx->data() + tok * ci * kNumBlades;
            for (std::size_t i = 0; i < ci; ++i) {
              for (std::size_t bl = 0; bl < kNumBlades; ++bl) {
                dst[i * kNumBlades + bl] += dxl[i * kNumBlades + bl];
              }
              for (std::size_t m = 0; m < shift.count; ++m) {
                dst[i * kNumBlades + shift.source[m]] +=
                    shift.sign[m] * dxs[i * kNumBlades + shift.target[m]];
              }
            }
          }
        }
        if (galpha) {
          for (std::size_t p = 0; p < co * ci; ++p) {
            for (std::size_t bl = 0; bl < kNumBlades; ++bl) {
              (*galpha)[p * 5 + pga::kBladeGrade[bl]] += da[p * kNumBlades + bl];
            }
          }
        }
        if (gbeta) {
          for (std::size_t p = 0; p < co * ci; ++p) {
            for (std::size_t m = 0; m < shift.count; ++m) {
              (*gbeta)[p * 4 + shift.source_grade[m]] += db[p * kNumBlades + shift.target[m]];
            }
          }
        }
        if (has_bias && c.grad_inputs[3]) {
          auto& gb = *c.grad_inputs[3];
          for (std::size_t tok = 0; tok < n; ++tok) {
            for (std::size_t o = 0; o < co; ++o) {
              gb[o] += c.grad_output[(tok * co + o) * kNumBlades];
            }
          }
        }
      });
}

Var equi_layernorm(Tape& t, Var x, double eps) {
  const auto& sx = t.shape(x);
  check_feature_shape(sx, "equi_layernorm");
  const std::size_t n = sx[0], ch = sx[1];
  const std::size_t w = ch * kNumBlades;
  auto inv_rms = [ch, eps](const double* row) {
    double s = 0.0;
    for (std::size_t c = 0; c < ch; ++c) {
      for (auto b : kInvariant) s += row[c * kNumBlades + b] * row[c * kNumBlades + b];
    }
    return 1.0 / std::sqrt(s / static_cast<double>(ch) + eps);
  };
  return t.record(
      "equi_layernorm", {x},
      [n, w, inv_rms](In in) {
        Tensor out(in[0]->shape);
        for (std::size_t tok = 0; tok < n; ++tok) {
          const double* row = in[0]->data.data() + tok * w;
          const double r = inv_rms(row);
          for (std::size_t i = 0; i < w; ++i) out.data[tok * w + i] = r * row[i];
        }
        return out;
      },
      [n, w, ch, inv_rms](const ad::BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        for (std::size_t tok = 0; tok < n; ++tok) {
          const double* row = c.inputs[0]->data.data() + tok * w;
          const double* gy = c.grad_output.data() + tok * w;
          const double r = inv_rms(row);
          double dot = 0.0;
          for (std::size_t i = 0; i < w; ++i) dot += gy[i] * row[i];
          const double k = r * r * r * dot / static_cast<double>(ch);
          double* dst = g->data() + tok * w;
          for (std::size_t i = 0; i < w; ++i) dst[i] += r * gy[i];
          for (std::size_t cc = 0; cc < ch; ++cc) {
            for (auto b : kInvariant) dst[cc * kNumBlades + b] -= k * row[cc * kNumBlades + b];
          }
        }
      });
}

Var gated_gelu(Tape& t, Var x) {
  const auto& sx = t.shape(x);
  if (sx.empty() || sx.back() != kNumBlades) throw ad::ShapeError("gated_gelu: last axis must be 16");
  const std::size_t rows = t.value(x).size() / kNumBlades;
  return t.record(
      "gated_gelu", {x},
      [rows](In in) {
        Tensor out(in[0]->shape);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* m = in[0]->data.data() + r * kNumBlades;
          const double gate = ad::gelu_value(m[0]);
          for (std::size_t b = 0; b < kNumBlades; ++b) out.data[r * kNumBlades + b] = gate * m[b];
        }
        return out;
      },
      [rows](const ad::BackwardContext& c) {
        auto* g = c.grad_inputs[0];
        if (!g) return;
        for (std::size_t r = 0; r < rows; ++r) {
          const double* m = c.inputs[0]->data.data() + r * kNumBlades;
          const double* gy = c.grad_output.data() + r * kNumBlades;
          const double gate = ad::gelu_value(m[0]);
          double dot = 0.0;
          for (std::size_t b = 0; b < kNumBlades; ++b) {
            (*g)[r * kNumBlades + b] += gate * gy[b];
            dot += gy[b] * m[b];
          }
          (*g)[r * kNumBlades] += ad::gelu_derivative(m[0]) * dot;
        }
      });
}

Var invariant_pairing(Tape& t, Var q, Var k) {
  const auto& sq = t.shape(q);
  const auto& sk = t.shape(k);
  check_feature_shape(sq, "invariant_pairing");
  check_feature_shape(sk, "invariant_pairing");
  if (sq[1] != sk[1]) throw ad::ShapeError("invariant_pairing: channel mismatch");
  const std::size_t n = sq[0], m = sk[0], ch = sq[1];
  return t.record(
      "invariant_pairing", {q, k},
      [n, m, ch](In in) {
        Tensor out({n, m});
        const double* Q = in[0]->data.data();
        const double* K = in[1]->data.data();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < ch; ++c) {
              const double* a = Q + (i * ch + c) * kNumBlades;
              const double* b = K + (j * ch + c) * kNumBlades;
              for (auto bl : kInvariant) s += a[bl] * b[bl];
            }
            out.data[i * m + j] = s;
          }
        }
        return out;
      },
      [n, m, ch](const ad::BackwardContext& c) {
        const double* Q = c.inputs[0]->data.data();
        const double* K = c.inputs[1]->data.data();
        auto* gq = c.grad_inputs[0];
        auto* gk = c.grad_inputs[1];
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            const double g = c.grad_output[i * m + j];
            if (g == 0.0) continue;
            for (std::size_t cc = 0; cc < ch; ++cc) {
              const std::size_t qi = (i * ch + cc) * kNumBlades;
              const std::size_t kj = (j * ch + cc) * kNumBlades;
              for (auto bl : kInvariant) {
                if (gq) (*gq)[qi + bl] += g * K[kj + bl];
                if (gk) (*gk)[kj + bl] += g * Q[qi + bl];
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------

EquiLinear::EquiLinear(std::string prefix, std::size_t in, std::size_t out, bool bias)
    : prefix_(std::move(prefix)), in_(in), out_(out), bias_(bias) {
  if (in == 0 || out == 0) throw std::invalid_argument("EquiLinear: channel counts must be positive");
}

void EquiLinear::declare(ParameterStore& store, Rng& rng, Init init) const {
  std::vector<double> alpha(out_ * in_ * 5, 0.0), beta(out_ * in_ * 4, 0.0);
  if (init == Init::kRandom) {
    std::uniform_real_distribution<double> ua(-1.0, 1.0);
    const double sa = 1.0 / std::sqrt(static_cast<double>(in_) * 5.0);
    const double sb = 1.0 / std::sqrt(static_cast<double>(in_) * 4.0);
    for (auto& v : alpha) v = sa * ua(rng);
    for (auto& v : beta) v = sb * ua(rng);
  }
  store.add(prefix_ + ".alpha", {out_, in_, 5}, std::move(alpha));
  store.add(prefix_ + ".beta", {out_, in_, 4}, std::move(beta));
  if (bias_) store.add(prefix_ + ".bias", {out_}, std::vector<double>(out_, 0.0));
}

Var EquiLinear::operator()(Tape& t, const Bindings& p, Var x) const {
  return equi_linear(t, x, p[prefix_ + ".alpha"], p[prefix_ + ".beta"],
                     bias_ ? p[prefix_ + ".bias"] : Var{});
}

GeometricMlp::GeometricMlp(const std::string& prefix, std::size_t in, std::size_t out,
                           std::size_t hidden)
    : in_(prefix + ".in", in, hidden), out_(prefix + ".out", hidden + hidden / 2, out),
      hidden_(hidden) {
  if (hidden < 2 || hidden % 2 != 0) throw std::invalid_argument("GeometricMlp: hidden width must be even");
}

void GeometricMlp::declare(ParameterStore& store, Rng& rng, Init out_init) const {
  in_.declare(store, rng, Init::kRandom);
  out_.declare(store, rng, out_init);
}

Var GeometricMlp::operator()(Tape& t, const Bindings& p, Var x) const {
  Var h = in_(t, p, equi_layernorm(t, x));
  const std::size_t half = hidden_ / 2;
  Var left = ad::slice(t, h, 1, 0, half);
  Var right = ad::slice(t, h, 1, half, half);
  Var prod = ad::geometric_product(t, left, right);
  Var z = gated_gelu(t, ad::concat(t, h, prod, 1));
  return out_(t, p, z);
}

double AttentionConfig::logit_scale() const {
  return std::sqrt(static_cast<double>(channels_per_head() * kInvariantBlades));
}

void AttentionConfig::validate() const {
  if (channels == 0 || heads == 0 || channels % heads != 0) {
    throw std::invalid_argument("attention: channels (" + std::to_string(channels) +
                                ") must be a positive multiple of heads (" + std::to_string(heads) + ")");
  }
}

GeometricAttention::GeometricAttention(const std::string& prefix, AttentionConfig cfg)
    : cfg_(cfg) {
  cfg_.validate();
  q_ = EquiLinear(prefix + ".q", cfg.channels, cfg.channels);
  // A key bias only shifts each logit row by a constant, which softmax ignores.
  k_ = EquiLinear(prefix + ".k", cfg.channels, cfg.channels, false);
  v_ = EquiLinear(prefix + ".v", cfg.channels, cfg.channels);
  out_ = EquiLinear(prefix + ".out", cfg.channels, cfg.channels);
}

void GeometricAttention::declare(ParameterStore& store, Rng& rng, Init out_init) const {
  q_.declare(store, rng);
  k_.declare(store, rng);
  v_.declare(store, rng);
  out_.declare(store, rng, out_init);
}

std::size_t GeometricAttention::num_parameters() const {
  return q_.num_parameters() + k_.num_parameters() + v_.num_parameters() + out_.num_parameters();
}

Var GeometricAttention::operator()(Tape& t, const Bindings& p, Var x,
                                   std::vector<Var>* weights) const {
  check_feature_shape(t.shape(x), "geometric_attention");
  if (t.shape(x)[1] != cfg_.channels) throw ad::ShapeError("geometric_attention: channel mismatch");
  const std::size_t n = t.shape(x)[0];
  const std::size_t ch = cfg_.channels_per_head();
  Var xn = equi_layernorm(t, x);
  Var q = q_(t, p, xn);
  Var k = k_(t, p, xn);
  Var v = v_(t, p, xn);
  Var merged;
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    Var qh = ad::slice(t, q, 1, h * ch, ch);
    Var kh = ad::slice(t, k, 1, h * ch, ch);
    Var vh = ad::slice(t, v, 1, h * ch, ch);
    Var logits = ad::scale(t, invariant_pairing(t, qh, kh), 1.0 / cfg_.logit_scale());
    Var attn = ad::softmax(t, logits);
    if (weights) weights->push_back(attn);
    Var flat = ad::reshape(t, vh, {n, ch * kNumBlades});
    Var oh = ad::reshape(t, ad::matmul(t, attn, flat), {n, ch, kNumBlades});
    merged = merged.valid() ? ad::concat(t, merged, oh, 1) : oh;
  }
  return out_(t, p, merged);
}

TransformerBlock::TransformerBlock(const std::string& prefix, AttentionConfig cfg)
    : attn_(prefix + ".attn", cfg), mlp_(prefix + ".mlp", cfg.channels, cfg.channels, 2 * cfg.channels) {}

void TransformerBlock::declare(ParameterStore& store, Rng& rng, Init out_init) const {
  attn_.declare(store, rng, out_init);
  mlp_.declare(store, rng, out_init);
}

Var TransformerBlock::operator()(Tape& t, const Bindings& p, Var x) const {
  Var a = ad::add(t, x, attn_(t, p, x));
  return ad::add(t, a, mlp_(t, p, a));
}

PoolingMlp::PoolingMlp(const std::string& prefix, std::size_t in_channels, std::size_t out_channels)
    : mlp_(prefix + ".mlp", in_channels + 1, out_channels, 2 * (in_channels + 1)), in_(in_channels) {}

void PoolingMlp::declare(ParameterStore& store, Rng& rng) const { mlp_.declare(store, rng); }

Var PoolingMlp::operator()(Tape& t, const Bindings& p, Var x, Var relative_translations) const {
  const auto& sx = t.shape(x);
  check_feature_shape(sx, "pooling_mlp");
  const auto& st = t.shape(relative_translations);
  if (sx[1] != in_ || st != Shape{sx[0], 1, kNumBlades}) {
    throw ad::ShapeError("pooling_mlp: need one translation per vertex, got " +
                         ad::shape_string(st) + " for input " + ad::shape_string(sx));
  }
  return mlp_(t, p, ad::concat(t, x, relative_translations, 1));
}

InterpolationMlp::InterpolationMlp(const std::string& prefix, std::size_t interp_channels,
                                   std::size_t skip_channels, std::size_t out_channels)
    : mlp_(prefix + ".mlp", interp_channels + skip_channels, out_channels,
           2 * (interp_channels + skip_channels)),
      interp_(interp_channels),
      skip_(skip_channels) {}

void InterpolationMlp::declare(ParameterStore& store, Rng& rng) const { mlp_.declare(store, rng); }

Var InterpolationMlp::operator()(Tape& t, const Bindings& p, Var interpolated, Var skip) const {
  const auto& si = t.shape(interpolated);
  const auto& ss = t.shape(skip);
  check_feature_shape(si, "interpolation_mlp");
  check_feature_shape(ss, "interpolation_mlp");
  if (si[0] != ss[0]) {
    throw ad::ShapeError("interpolation_mlp: token count mismatch " + std::to_string(si[0]) +
                         " vs " + std::to_string(ss[0]));
  }
  if (si[1] != interp_ || ss[1] != skip_) throw ad::ShapeError("interpolation_mlp: channel mismatch");
  return mlp_(t, p, ad::concat(t, interpolated, skip, 1));
}

Tensor relative_translations(const std::vector<pga::Vec3>& positions,
                             const std::vector<std::uint32_t>& coarse_indices,
                             const std::vector<std::uint32_t>& assignment) {
  if (assignment.size() != positions.size()) {
    throw ad::ShapeError("relative_translations: one assignment per vertex required");
  }
  Tensor out({positions.size(), 1, kNumBlades});
  for (std::size_t v = 0; v < positions.size(); ++v) {
    const auto& p = positions.at(coarse_indices.at(assignment[v]));
    const auto& q = positions[v];
    const auto m = pga::embed(pga::Translation{{p[0] - q[0], p[1] - q[1], p[2] - q[2]}});
    std::copy_n(m.coeffs().data(), kNumBlades, out.data.data() + v * kNumBlades);
  }
  return out;
}

}  // namespace labgatr::layers
