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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "labgatr/dataset.hpp"
#include "labgatr/model.hpp"

namespace labgatr::run {

namespace fs = std::filesystem;

/// Procedurally generated train/val split.
struct ToySpec {
  data::ToyKind kind = data::ToyKind::kVolume;
  std::size_t train = 100;
  std::size_t val = 20;
  std::uint64_t seed = 0;

  friend bool operator==(const ToySpec&, const ToySpec&) = default;
};

struct VerifyToggles {
  bool equivariance = false;  // before training
  bool gradients = false;

  friend bool operator==(const VerifyToggles&, const VerifyToggles&) = default;
};

/// Everything a `train` run needs. Either both directories or `toy` is set.
///
///   {
///     "preset": "volume-velocity",
///     "model": { ...ModelConfig overrides... },
///     "data": { "train_dir": "train", "val_dir": "val" }
///          |  { "toy": { "kind": "volume", "train": 100, "val": 20, "seed": 0 } },
///     "out_dir": "runs/a",
///     "serial": false, "threads": 0, "plan_seed": 0,
///     "verify": { "equivariance": false, "gradients": false }
///   }
struct RunConfig {
  std::string preset = "volume-velocity";
  model::ModelConfig model = model::preset("volume-velocity");
  std::optional<fs::path> train_dir;
  std::optional<fs::path> val_dir;
  std::optional<ToySpec> toy;
  fs::path out_dir = "labgatr_out";
  bool serial = false;
  std::size_t threads = 0;
  std::uint64_t plan_seed = 0;
  VerifyToggles verify;

  /// Throws std::invalid_argument on an inconsistent data section or model.
  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Relative paths are resolved against `base_dir` and made absolute. Throws
/// std::invalid_argument on unknown keys, wrong types or missing dataset
/// directories.
RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir);
nlohmann::json run_config_to_json(const RunConfig& c);

/// Parses a JSON file; paths are relative to the file's directory.
RunConfig load_run_config(const fs::path& path);

/// Train and val samples: loaded from the directories or generated.
struct Dataset {
  std::vector<mesh::MeshSample> train;
  std::vector<mesh::MeshSample> val;
};
Dataset load_dataset(const RunConfig& c);

}  // namespace labgatr::run
