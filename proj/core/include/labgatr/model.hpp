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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "labgatr/layers.hpp"
#include "labgatr/mesh.hpp"
#include "labgatr/parameters.hpp"
#include "labgatr/tokenizer.hpp"

namespace labgatr::model {

using autodiff::Bindings;
using autodiff::ParameterStore;
using autodiff::Tape;
using autodiff::Tensor;
using autodiff::Var;

enum class Task { kVertexRegression, kMeshRegression, kClassification };

std::string task_name(Task t);
Task task_from_name(const std::string& s);

struct ModelConfig {
  std::size_t channels = 8;
  std::size_t heads = 4;
  std::size_t blocks = 4;
  double ratio = tokenizer::ratio::kSurface;
  std::size_t k = 3;
  Task task = Task::kVertexRegression;
  /// Vertex tasks: 1 (scalar) or 3 (vector). Mesh regression: 1.
  /// Classification: number of classes.
  std::size_t output_dim = 3;
  mesh::Schema schema = {{mesh::Role::kPoint, "position"}};
  std::uint64_t seed = 0;
  double lr = 3e-4;
  double lr_decay = 0.9995;
  std::size_t epochs = 200;
  std::size_t batch_size = 4;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json config_to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig config_from_json(const nlohmann::json& j, ModelConfig base = {});

/// Named configurations: "surface-wss", "volume-velocity", "mesh-scalar" and
/// "large" (about 320k parameters).
ModelConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Inputs of one mesh that do not depend on parameters.
struct PreparedSample {
  Tensor features;      // [n, c_in, 16]
  Tensor translations;  // [n, 1, 16]
  tokenizer::TokenizationPlan plan;
  Tensor target;        // [n, d], [1] or empty
  std::size_t label = 0;
  std::vector<mesh::Vec3> positions;
};

class Model {
 public:
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }

  /// Fresh parameters drawn from the config seed. Block output projections
  /// start at zero.
  ParameterStore init() const;
  std::size_t num_parameters() const;

  /// Embeds, tokenises and reads the target. Throws std::invalid_argument on
  /// a task / target mismatch.
  PreparedSample prepare(const mesh::MeshSample& sample, std::uint64_t plan_seed) const;

  /// Vertex tasks: [n, output_dim]; mesh regression: [1]; classification:
  /// logits [classes].
  Var forward(Tape& t, const Bindings& p, Var features, Var translations,
              const tokenizer::TokenizationPlan& plan) const;
  Var forward(Tape& t, const Bindings& p, const PreparedSample& s) const;

  /// L1 for regression, cross-entropy for classification.
  Var loss(Tape& t, Var prediction, const PreparedSample& s) const;

  /// Prediction values; class probabilities for classification.
  Tensor predict(const ParameterStore& params, const PreparedSample& s) const;

 private:
  ModelConfig cfg_;
  layers::PoolingMlp pool_;
  std::vector<layers::TransformerBlock> blocks_;
  layers::InterpolationMlp interp_;
  layers::EquiLinear head_;
};

/// Relative L2 error in percent: 100 sqrt(sum |p - y|^2 / sum |y|^2). Throws
/// std::invalid_argument on an all-zero target or size mismatch.
double metric_eps(std::span<const double> pred, std::span<const double> target);

/// Mean absolute error. Throws std::invalid_argument on empty input.
double metric_mae(std::span<const double> pred, std::span<const double> target);

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainOptions {
  /// One worker and wall_seconds written as 0 so repeated runs are
  /// byte-identical.
  bool serial = false;
  /// Worker cap; 0 reads LABGATR_THREADS, falling back to the core count.
  std::size_t threads = 0;
  /// If set: log.csv, best.ckpt (+ .json sidecar), final.ckpt,
  /// model_config.json and timing.csv are written here.
  std::filesystem::path out_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  ParameterStore best;
  double best_val = 0.0;
  std::size_t best_epoch = 0;
};

/// Adam on minibatches of shuffled training samples, lr = lr0 * decay^epoch.
/// Throws std::runtime_error on a non-finite loss.
TrainResult train(const Model& model, ParameterStore& params, const std::vector<PreparedSample>& train_set,
                  const std::vector<PreparedSample>& val_set, const TrainOptions& options);

/// Mean loss over samples.
double evaluate_loss(const Model& model, const ParameterStore& params,
                     const std::vector<PreparedSample>& samples, std::size_t threads = 1);

std::size_t worker_count(std::size_t requested);

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& log,
                   bool zero_wall_time);

void save_model_config(const std::filesystem::path& path, const ModelConfig& cfg);
ModelConfig load_model_config(const std::filesystem::path& path);

}  // namespace labgatr::model
