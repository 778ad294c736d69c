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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "labgatr/autodiff.hpp"

namespace labgatr::autodiff {

/// One trainable array with its gradient buffer and Adam moments.
struct ParameterArray {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::uint64_t step = 0;
};

/// Named trainable arrays, iterated in lexicographic name order.
class ParameterStore {
 public:
  /// Adds a new array. Throws std::invalid_argument on duplicate names or a
  /// value/shape size mismatch.
  ParameterArray& add(const std::string& name, Shape shape, std::vector<double> value);

  bool contains(std::string_view name) const;
  ParameterArray& at(std::string_view name);
  const ParameterArray& at(std::string_view name) const;

  const std::map<std::string, ParameterArray, std::less<>>& arrays() const { return arrays_; }
  std::map<std::string, ParameterArray, std::less<>>& arrays() { return arrays_; }

  std::vector<std::string> names() const;
  std::size_t num_scalars() const;

  /// Clears gradients only; values and moments are untouched.
  void zero_grad();

  /// Exact equality of names, shapes and values.
  bool same_values(const ParameterStore& other) const;

 private:
  std::map<std::string, ParameterArray, std::less<>> arrays_;
};

/// Tape variables for every array of a store, created by bind().
class Bindings {
 public:
  Var operator[](std::string_view name) const;
  bool contains(std::string_view name) const;
  /// Replaces the variable bound to `name` (used by parameter grad checks).
  void set(const std::string& name, Var v);
  const std::map<std::string, Var, std::less<>>& vars() const { return vars_; }

 private:
  std::map<std::string, Var, std::less<>> vars_;
};

Bindings bind(Tape& tape, const ParameterStore& store);

/// Adds `scale` times the gradients found on the tape into the store buffers.
void accumulate_gradients(const Tape& tape, const Bindings& bindings, ParameterStore& store,
                          double scale = 1.0);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of every array using its gradient buffer.
void adam_step(ParameterStore& store, double lr, const AdamConfig& cfg = {});

// ---------------------------------------------------------------------------
// Checkpoints
//
// Binary layout (all integers and floats little-endian):
//   magic "LGCK" | u32 version | u32 flags | u32 array count
//   per array: u32 name length | UTF-8 name | u32 rank | u64 extents... |
//              f64 values... | [u64 step | f64 adam_m... | f64 adam_v...]
// The bracketed optimizer block is present iff flags bit 0 is set.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointOptions {
  bool include_optimizer = true;
};

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const CheckpointOptions& options = {});

/// Throws std::runtime_error on a malformed or truncated file.
ParameterStore load_checkpoint(const std::filesystem::path& path);

/// Optimizer-state metadata written next to a checkpoint.
nlohmann::json optimizer_metadata(const ParameterStore& store, const AdamConfig& cfg, double lr);

}  // namespace labgatr::autodiff
