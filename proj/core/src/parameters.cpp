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

#include "labgatr/parameters.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "labgatr/binary_io.hpp"

namespace labgatr::autodiff {

ParameterArray& ParameterStore::add(const std::string& name, Shape shape,
                                    std::vector<double> value) {
  if (arrays_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  if (numel(shape) != value.size()) {
    throw std::invalid_argument("parameter '" + name + "': value size does not match shape " +
                                shape_string(shape));
  }
  ParameterArray a;
  a.shape = std::move(shape);
  a.grad.assign(value.size(), 0.0);
  a.adam_m.assign(value.size(), 0.0);
  a.adam_v.assign(value.size(), 0.0);
  a.value = std::move(value);
  return arrays_.emplace(name, std::move(a)).first->second;
}

bool ParameterStore::contains(std::string_view name) const { return arrays_.find(name) != arrays_.end(); }

ParameterArray& ParameterStore::at(std::string_view name) {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const ParameterArray& ParameterStore::at(std::string_view name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::out_of_range("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(arrays_.size());
  for (const auto& [name, _] : arrays_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, a] : arrays_) n += a.value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, a] : arrays_) std::fill(a.grad.begin(), a.grad.end(), 0.0);
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (arrays_.size() != other.arrays_.size()) return false;
  auto it = other.arrays_.begin();
  for (const auto& [name, a] : arrays_) {
    if (name != it->first || a.shape != it->second.shape || a.value != it->second.value) {
      return false;
    }
    ++it;
  }
  return true;
}

// ---------------------------------------------------------------------------

Var Bindings::operator[](std::string_view name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("parameter '" + std::string(name) + "' is not bound");
  return it->second;
}

bool Bindings::contains(std::string_view name) const { return vars_.find(name) != vars_.end(); }

void Bindings::set(const std::string& name, Var v) { vars_[name] = v; }

Bindings bind(Tape& tape, const ParameterStore& store) {
  Bindings b;
  for (const auto& [name, a] : store.arrays()) {
    b.set(name, tape.variable(Tensor(a.shape, a.value)));
  }
  return b;
}

void accumulate_gradients(const Tape& tape, const Bindings& bindings, ParameterStore& store,
                          double scale) {
  for (const auto& [name, v] : bindings.vars()) {
    if (!store.contains(name)) continue;
    auto g = tape.grad(v);
    if (g.empty()) continue;
    auto& a = store.at(name);
    for (std::size_t i = 0; i < a.grad.size(); ++i) a.grad[i] += scale * g[i];
  }
}

void adam_step(ParameterStore& store, double lr, const AdamConfig& cfg) {
  for (auto& [_, a] : store.arrays()) {
    a.step += 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(a.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(a.step));
    for (std::size_t i = 0; i < a.value.size(); ++i) {
      const double g = a.grad[i];
      a.adam_m[i] = cfg.beta1 * a.adam_m[i] + (1.0 - cfg.beta1) * g;
      a.adam_v[i] = cfg.beta2 * a.adam_v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = a.adam_m[i] / c1;
      const double vhat = a.adam_v[i] / c2;
      a.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'L', 'G', 'C', 'K'};
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const CheckpointOptions& options) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, 4);
  binary::write_le<std::uint32_t>(os, kCheckpointVersion);
  binary::write_le<std::uint32_t>(os, options.include_optimizer ? 1u : 0u);
  binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(store.arrays().size()));
  for (const auto& [name, a] : store.arrays()) {
    binary::write_string(os, name);
    binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) binary::write_le<std::uint64_t>(os, d);
    for (double x : a.value) binary::write_le<double>(os, x);
    if (options.include_optimizer) {
      binary::write_le<std::uint64_t>(os, a.step);
      for (double x : a.adam_m) binary::write_le<double>(os, x);
      for (double x : a.adam_v) binary::write_le<double>(os, x);
    }
  }
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  const auto version = binary::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto flags = binary::read_le<std::uint32_t>(is);
  const auto count = binary::read_le<std::uint32_t>(is);
  ParameterStore store;
  for (std::uint32_t n = 0; n < count; ++n) {
    std::string name = binary::read_string(is);
    const auto rank = binary::read_le<std::uint32_t>(is);
    if (rank > 8) throw std::runtime_error("checkpoint: implausible rank for '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = binary::read_le<std::uint64_t>(is);
    const std::size_t size = numel(shape);
    if (size > (std::size_t{1} << 32)) throw std::runtime_error("checkpoint: array too large");
    std::vector<double> value(size);
    for (auto& x : value) x = binary::read_le<double>(is);
    auto& a = store.add(name, shape, std::move(value));
    if (flags & 1u) {
      a.step = binary::read_le<std::uint64_t>(is);
      for (auto& x : a.adam_m) x = binary::read_le<double>(is);
      for (auto& x : a.adam_v) x = binary::read_le<double>(is);
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint: trailing bytes in " + path.string());
  }
  return store;
}

nlohmann::json optimizer_metadata(const ParameterStore& store, const AdamConfig& cfg, double lr) {
  std::uint64_t step = 0;
  for (const auto& [_, a] : store.arrays()) step = std::max(step, a.step);
  return nlohmann::json{{"optimizer", "adam"},
                        {"beta1", cfg.beta1},
                        {"beta2", cfg.beta2},
                        {"eps", cfg.eps},
                        {"lr", lr},
                        {"step", step},
                        {"num_arrays", store.arrays().size()},
                        {"num_scalars", store.num_scalars()},
                        {"format_version", kCheckpointVersion}};
}

}  // namespace labgatr::autodiff
