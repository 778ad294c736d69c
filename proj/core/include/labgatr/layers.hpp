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
#include <random>
#include <string>
#include <vector>

#include "labgatr/autodiff.hpp"
#include "labgatr/parameters.hpp"
#include "labgatr/pga.hpp"

// E(3)-equivariant building blocks on multivector feature tensors.
//
// A feature tensor is an autodiff::Tensor of shape [tokens, channels, 16]
// whose last axis follows the blade order of pga.hpp.
namespace labgatr::layers {

using autodiff::Bindings;
using autodiff::ParameterStore;
using autodiff::Shape;
using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;
using Rng = std::mt19937_64;

inline constexpr double kLayerNormEps = 1e-6;

/// Number of invariant (e0-free) blades; the per-channel width of attention
/// logits.
inline constexpr std::size_t kInvariantBlades = 8;

Tensor make_features(std::size_t tokens, std::size_t channels);

/// Throws autodiff::ShapeError unless `shape` is [n >= 1, c >= 1, 16].
void check_feature_shape(const Shape& shape, const char* what);

/// Applies a versor to every multivector of a feature tensor.
Tensor transform_features(const Tensor& x, const pga::Versor& g);

// ---------------------------------------------------------------------------
// Fused equivariant primitives

/// out[o] = sum_i sum_k alpha[o,i,k] <x_i>_k + sum_i sum_k beta[o,i,k] e0 <x_i>_k
///          (+ bias[o] on the scalar blade)
/// with alpha of shape [out, in, 5] (k = 0..4) and beta of shape [out, in, 4]
/// (k = 0..3; e0 <x>_4 vanishes). Pass an invalid Var for no bias.
Var equi_linear(Tape& t, Var x, Var alpha, Var beta, Var bias = {});

/// Divides every token by sqrt(mean over channels of inv_norm_sq + eps).
Var equi_layernorm(Tape& t, Var x, double eps = kLayerNormEps);

/// Scales each multivector by GELU of its own scalar component.
Var gated_gelu(Tape& t, Var x);

/// [n, c, 16] x [m, c, 16] -> [n, m]: sum over channels and e0-free blades of
/// q * k.
Var invariant_pairing(Tape& t, Var q, Var k);

// ---------------------------------------------------------------------------
// Parameterized layers. Each layer owns the names of its parameter arrays
// ("<prefix>.alpha", ...) and reads them from Bindings at call time.

enum class Init { kRandom, kZero };

class EquiLinear {
 public:
  EquiLinear() = default;
  EquiLinear(std::string prefix, std::size_t in, std::size_t out, bool bias = true);

  void declare(ParameterStore& store, Rng& rng, Init init = Init::kRandom) const;
  Var operator()(Tape& t, const Bindings& p, Var x) const;

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  const std::string& prefix() const { return prefix_; }
  std::size_t num_parameters() const { return out_ * in_ * 9 + (bias_ ? out_ : 0); }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  bool bias_ = true;
};

/// layernorm -> linear (in -> hidden) -> geometric products of channel pairs
/// (i, i + hidden/2) appended -> gated GELU -> linear (3 hidden / 2 -> out).
class GeometricMlp {
 public:
  GeometricMlp() = default;
  GeometricMlp(const std::string& prefix, std::size_t in, std::size_t out, std::size_t hidden);

  void declare(ParameterStore& store, Rng& rng, Init out_init = Init::kRandom) const;
  Var operator()(Tape& t, const Bindings& p, Var x) const;
  std::size_t num_parameters() const { return in_.num_parameters() + out_.num_parameters(); }

 private:
  EquiLinear in_;
  EquiLinear out_;
  std::size_t hidden_ = 0;
};

struct AttentionConfig {
  std::size_t channels = 8;
  std::size_t heads = 4;

  std::size_t channels_per_head() const { return channels / heads; }
  /// sqrt(channels_per_head * 8): the number of invariant components paired
  /// per head.
  double logit_scale() const;
  void validate() const;
};

/// Multi-head self-attention with invariant logits; the residual is added by
/// the caller.
class GeometricAttention {
 public:
  GeometricAttention() = default;
  GeometricAttention(const std::string& prefix, AttentionConfig cfg);

  void declare(ParameterStore& store, Rng& rng, Init out_init = Init::kZero) const;

  /// If `weights` is given, the per-head [n, n] attention matrices are
  /// appended to it.
  Var operator()(Tape& t, const Bindings& p, Var x, std::vector<Var>* weights = nullptr) const;
  std::size_t num_parameters() const;
  const AttentionConfig& config() const { return cfg_; }

 private:
  AttentionConfig cfg_;
  EquiLinear q_, k_, v_, out_;
};

/// A = X + attention(X); Y = A + mlp(A).
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const std::string& prefix, AttentionConfig cfg);

  void declare(ParameterStore& store, Rng& rng, Init out_init = Init::kZero) const;
  Var operator()(Tape& t, const Bindings& p, Var x) const;
  std::size_t num_parameters() const { return attn_.num_parameters() + mlp_.num_parameters(); }

 private:
  GeometricAttention attn_;
  GeometricMlp mlp_;
};

/// Fine-to-coarse messages: mlp(X0|v, translation(p - v)). Aggregation is done
/// by the caller with scatter_mean.
class PoolingMlp {
 public:
  PoolingMlp() = default;
  PoolingMlp(const std::string& prefix, std::size_t in_channels, std::size_t out_channels);

  void declare(ParameterStore& store, Rng& rng) const;

  /// x: [n, in_channels, 16]; relative_translations: [n, 1, 16] translator
  /// multivectors (constant).
  Var operator()(Tape& t, const Bindings& p, Var x, Var relative_translations) const;
  std::size_t num_parameters() const { return mlp_.num_parameters(); }

 private:
  GeometricMlp mlp_;
  std::size_t in_ = 0;
};

/// Fine-resolution lift: mlp(concat(interpolated, skip)).
class InterpolationMlp {
 public:
  InterpolationMlp() = default;
  InterpolationMlp(const std::string& prefix, std::size_t interp_channels,
                   std::size_t skip_channels, std::size_t out_channels);

  void declare(ParameterStore& store, Rng& rng) const;
  Var operator()(Tape& t, const Bindings& p, Var interpolated, Var skip) const;
  std::size_t num_parameters() const { return mlp_.num_parameters(); }

 private:
  GeometricMlp mlp_;
  std::size_t interp_ = 0;
  std::size_t skip_ = 0;
};

/// Translator multivectors embedding p - v for each fine vertex v with its
/// cluster centre p, as a [n, 1, 16] tensor.
Tensor relative_translations(const std::vector<pga::Vec3>& positions,
                             const std::vector<std::uint32_t>& coarse_indices,
                             const std::vector<std::uint32_t>& assignment);

}  // namespace labgatr::layers
