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

#include "labgatr/model.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "labgatr/dataset.hpp"
#include "labgatr/ops.hpp"

namespace labgatr::model {

namespace ad = autodiff;

std::string task_name(Task t) {
  switch (t) {
    case Task::kVertexRegression:
      return "vertex-regression";
    case Task::kMeshRegression:
      return "mesh-regression";
    case Task::kClassification:
      return "classification";
  }
  return "?";
}

Task task_from_name(const std::string& s) {
  if (s == "vertex-regression") return Task::kVertexRegression;
  if (s == "mesh-regression") return Task::kMeshRegression;
  if (s == "classification") return Task::kClassification;
  throw std::invalid_argument("unknown task '" + s +
                              "' (vertex-regression, mesh-regression, classification)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("model config: " + m); };
  if (channels == 0 || heads == 0) fail("channels and heads must be positive");
  if (channels % heads != 0) fail("channels must be divisible by heads");
  if (blocks == 0) fail("need at least one transformer block");
  if (!(ratio > 0.0 && ratio <= 1.0)) fail("ratio must lie in (0, 1]");
  if (k == 0) fail("k must be positive");
  switch (task) {
    case Task::kVertexRegression:
      if (output_dim != 1 && output_dim != 3) fail("vertex regression output_dim must be 1 or 3");
      break;
    case Task::kMeshRegression:
      if (output_dim != 1) fail("mesh regression output_dim must be 1");
      break;
    case Task::kClassification:
      if (output_dim < 2) fail("classification needs at least 2 classes");
      break;
  }
  if (schema.empty()) fail("schema is empty");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("lr_decay must lie in (0, 1]");
  if (batch_size == 0) fail("batch_size must be positive");
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"channels", c.channels}, {"heads", c.heads},       {"blocks", c.blocks},
          {"ratio", c.ratio},       {"k", c.k},               {"task", task_name(c.task)},
          {"output_dim", c.output_dim},
          {"schema", mesh::schema_to_json(c.schema)},
          {"seed", c.seed},         {"lr", c.lr},             {"lr_decay", c.lr_decay},
          {"epochs", c.epochs},     {"batch_size", c.batch_size}};
}

ModelConfig config_from_json(const nlohmann::json& j, ModelConfig c) {
  if (!j.is_object()) throw std::invalid_argument("model config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "channels") c.channels = v.get<std::size_t>();
      else if (key == "heads") c.heads = v.get<std::size_t>();
      else if (key == "blocks") c.blocks = v.get<std::size_t>();
      else if (key == "ratio") c.ratio = v.get<double>();
      else if (key == "k") c.k = v.get<std::size_t>();
      else if (key == "task") c.task = task_from_name(v.get<std::string>());
      else if (key == "output_dim") c.output_dim = v.get<std::size_t>();
      else if (key == "schema") c.schema = mesh::schema_from_json(v);
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "lr_decay") c.lr_decay = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("model config key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

std::vector<std::string> preset_names() { return {"surface-wss", "volume-velocity", "mesh-scalar", "large"}; }

ModelConfig preset(const std::string& name) {
  ModelConfig c;
  if (name == "surface-wss") {
    c.ratio = 0.1;
    c.k = 3;
    c.schema = data::default_schema(data::ToyKind::kSurface);
  } else if (name == "volume-velocity") {
    c.ratio = 0.05;
    c.k = 4;
    c.schema = data::default_schema(data::ToyKind::kVolume);
  } else if (name == "mesh-scalar") {
    c.task = Task::kMeshRegression;
    c.output_dim = 1;
    c.ratio = 0.1;
    c.k = 3;
    c.schema = data::default_schema(data::ToyKind::kMeshLevel);
  } else if (name == "large") {
    c = preset("surface-wss");
    c.channels = 16;
    c.heads = 4;
    // Deepest stack that stays at or below 320k parameters.
    c.blocks = 1;
    for (;;) {
      ModelConfig next = c;
      ++next.blocks;
      if (Model(next).num_parameters() > 320000) break;
      c = next;
    }
  } else {
    std::string all;
    for (const auto& n : preset_names()) all += (all.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "' (" + all + ")");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t head_channels(const ModelConfig& c) {
  return c.task == Task::kClassification ? c.output_dim : 1;
}

}  // namespace

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const std::size_t cin = cfg_.schema.size(), c = cfg_.channels;
  pool_ = layers::PoolingMlp("pool", cin, c);
  for (std::size_t i = 0; i < cfg_.blocks; ++i) {
    blocks_.emplace_back("block" + std::to_string(i), layers::AttentionConfig{c, cfg_.heads});
  }
  interp_ = layers::InterpolationMlp("interp", c, cin, c);
  head_ = layers::EquiLinear("head", c, head_channels(cfg_));
}

ParameterStore Model::init() const {
  ParameterStore store;
  layers::Rng rng(cfg_.seed);
  pool_.declare(store, rng);
  for (const auto& b : blocks_) b.declare(store, rng);
  interp_.declare(store, rng);
  head_.declare(store, rng);
  return store;
}

std::size_t Model::num_parameters() const {
  std::size_t n = pool_.num_parameters() + interp_.num_parameters() + head_.num_parameters();
  for (const auto& b : blocks_) n += b.num_parameters();
  return n;
}

PreparedSample Model::prepare(const mesh::MeshSample& sample, std::uint64_t plan_seed) const {
  PreparedSample s;
  s.positions = sample.positions;
  s.features = mesh::embed_mesh(sample, cfg_.schema);
  tokenizer::PlanOptions opt;
  opt.ratio = cfg_.ratio;
  opt.k = cfg_.k;
  opt.seed = plan_seed;
  s.plan = tokenizer::build_plan(s.positions, opt);
  s.translations = layers::relative_translations(s.positions, s.plan.coarse_indices, s.plan.assignment);
  const std::size_t n = s.positions.size();
  switch (cfg_.task) {
    case Task::kVertexRegression:
      if (sample.target_kind == mesh::TargetKind::kNone) break;
      if (sample.target_kind != mesh::TargetKind::kVertex || sample.target_dim != cfg_.output_dim) {
        throw std::invalid_argument("sample target does not match a per-vertex target of width " +
                                    std::to_string(cfg_.output_dim));
      }
      s.target = Tensor({n, cfg_.output_dim}, sample.target);
      break;
    case Task::kMeshRegression:
      if (sample.target_kind == mesh::TargetKind::kNone) break;
      if (sample.target_kind != mesh::TargetKind::kMesh || sample.target_dim != 1) {
        throw std::invalid_argument("mesh regression needs a single mesh-level target value");
      }
      s.target = Tensor({1}, sample.target);
      break;
    case Task::kClassification: {
      if (sample.target_kind == mesh::TargetKind::kNone) break;
      if (sample.target_kind != mesh::TargetKind::kMesh || sample.target_dim != 1) {
        throw std::invalid_argument("classification needs a single mesh-level class label");
      }
      const double v = sample.target[0];
      if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(cfg_.output_dim)) {
        throw std::invalid_argument("class label must be an integer in [0, " +
                                    std::to_string(cfg_.output_dim) + ")");
      }
      s.label = static_cast<std::size_t>(v);
      s.target = Tensor({1}, {v});
      break;
    }
  }
  return s;
}

Var Model::forward(Tape& t, const Bindings& p, Var features, Var translations,
                   const tokenizer::TokenizationPlan& plan) const {
  const std::size_t n = t.shape(features).at(0);
  if (plan.num_fine != n) throw ad::ShapeError("forward: plan and features disagree on vertex count");
  const std::size_t m = plan.n_coarse();

  // Pool fine messages into coarse tokens.
  Var msg = pool_(t, p, features, translations);
  Var x = ad::scatter_mean(t, msg, plan.assignment, m);
  const bool mesh_level = cfg_.task != Task::kVertexRegression;
  if (mesh_level) x = ad::concat(t, x, ad::mean_rows(t, x), 0);

  for (const auto& b : blocks_) x = b(t, p, x);

  if (!mesh_level) {
    Var up = ad::weighted_gather(t, x, plan.interp.neighbors, plan.interp.weights, plan.interp.k);
    Var y = head_(t, p, interp_(t, p, up, features));  // [n, 1, 16]
    if (cfg_.output_dim == 1) return ad::reshape(t, ad::slice(t, y, 2, 0, 1), {n, 1});
    // e1, e2, e3
    return ad::reshape(t, ad::slice(t, y, 2, 2, 3), {n, 3});
  }
  Var token = head_(t, p, ad::slice(t, x, 0, m, 1));  // [1, channels, 16]
  const std::size_t out = head_channels(cfg_);
  return ad::reshape(t, ad::slice(t, token, 2, 0, 1), {out});
}

Var Model::forward(Tape& t, const Bindings& p, const PreparedSample& s) const {
  return forward(t, p, t.constant(s.features), t.constant(s.translations), s.plan);
}

Var Model::loss(Tape& t, Var prediction, const PreparedSample& s) const {
  if (s.target.size() == 0) throw std::invalid_argument("loss: sample has no target");
  if (cfg_.task == Task::kClassification) return ad::cross_entropy(t, prediction, s.label);
  return ad::l1_loss(t, prediction, t.constant(s.target));
}

Tensor Model::predict(const ParameterStore& params, const PreparedSample& s) const {
  Tape t;
  const Bindings b = ad::bind(t, params);
  Var y = forward(t, b, s);
  if (cfg_.task == Task::kClassification) y = ad::softmax(t, y);
  return t.value(y);
}

// ---------------------------------------------------------------------------

double metric_eps(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("metric_eps: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += (pred[i] - target[i]) * (pred[i] - target[i]);
    den += target[i] * target[i];
  }
  if (!(den > 0.0)) throw std::invalid_argument("metric_eps: target is zero");
  return 100.0 * std::sqrt(num / den);
}

double metric_mae(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("metric_mae: size mismatch");
  if (pred.empty()) throw std::invalid_argument("metric_mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LABGATR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct SampleGrad {
  std::unique_ptr<Tape> tape;
  Bindings bindings;
  double loss = 0.0;
};

SampleGrad sample_gradient(const Model& model, const ParameterStore& params, const PreparedSample& s) {
  SampleGrad g;
  g.tape = std::make_unique<Tape>();
  g.bindings = ad::bind(*g.tape, params);
  Var l = model.loss(*g.tape, model.forward(*g.tape, g.bindings, s), s);
  g.loss = g.tape->value(l).data[0];
  g.tape->backward(l);
  return g;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

}  // namespace

double evaluate_loss(const Model& model, const ParameterStore& params,
                     const std::vector<PreparedSample>& samples, std::size_t threads) {
  if (samples.empty()) return 0.0;
  std::vector<double> losses(samples.size());
  parallel_for(samples.size(), std::max<std::size_t>(1, threads), [&](std::size_t i) {
    Tape t;
    const Bindings b = ad::bind(t, params);
    losses[i] = t.value(model.loss(t, model.forward(t, b, samples[i]), samples[i])).data[0];
  });
  double s = 0.0;
  for (double l : losses) s += l;
  return s / static_cast<double>(samples.size());
}

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& log,
                   bool zero_wall_time) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "epoch,lr,train_loss,val_loss,wall_seconds\n";
  for (const auto& r : log) {
    os << r.epoch << ',' << fmt17(r.lr) << ',' << fmt17(r.train_loss) << ',' << fmt17(r.val_loss) << ','
       << fmt17(zero_wall_time ? 0.0 : r.wall_seconds) << '\n';
  }
}

void save_model_config(const std::filesystem::path& path, const ModelConfig& cfg) {
  write_json(path, config_to_json(cfg));
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

TrainResult train(const Model& model, ParameterStore& params, const std::vector<PreparedSample>& train_set,
                  const std::vector<PreparedSample>& val_set, const TrainOptions& options) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  const auto& cfg = model.config();
  const std::size_t workers = options.serial ? 1 : worker_count(options.threads);
  const bool write = !options.out_dir.empty();
  if (write) {
    std::filesystem::create_directories(options.out_dir);
    save_model_config(options.out_dir / "model_config.json", cfg);
  }

  TrainResult result;
  result.best = params;
  result.best_val = std::numeric_limits<double>::infinity();
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5bd1e9955bd1e995ull);
  std::vector<std::size_t> order(train_set.size());
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double train_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bs = std::min(cfg.batch_size, order.size() - start);
      std::vector<SampleGrad> grads(bs);
      parallel_for(bs, workers, [&](std::size_t i) {
        grads[i] = sample_gradient(model, params, train_set[order[start + i]]);
      });
      params.zero_grad();
      // Fixed summation order keeps threaded runs identical to serial ones.
      for (auto& g : grads) {
        if (!std::isfinite(g.loss)) {
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        ad::accumulate_gradients(*g.tape, g.bindings, params, 1.0 / static_cast<double>(bs));
        train_sum += g.loss;
      }
      grads.clear();
      ad::adam_step(params, lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = train_sum / static_cast<double>(train_set.size());
    rec.val_loss = val_set.empty() ? rec.train_loss : evaluate_loss(model, params, val_set, workers);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);

    if (rec.val_loss < result.best_val) {
      result.best_val = rec.val_loss;
      result.best_epoch = epoch;
      result.best = params;
      if (write) {
        ad::save_checkpoint(options.out_dir / "best.ckpt", params);
        auto meta = ad::optimizer_metadata(params, {}, lr);
        meta["epoch"] = epoch;
        meta["val_loss"] = rec.val_loss;
        write_json(options.out_dir / "best.ckpt.json", meta);
      }
    }
    if (options.on_epoch) options.on_epoch(rec);
  }

  if (write) {
    ad::save_checkpoint(options.out_dir / "final.ckpt", params);
    write_log_csv(options.out_dir / "log.csv", result.log, options.serial);
    std::ofstream timing(options.out_dir / "timing.csv");
    timing << "epoch,wall_seconds\n";
    for (const auto& r : result.log) timing << r.epoch << ',' << fmt17(r.wall_seconds) << '\n';
  }
  return result;
}

}  // namespace labgatr::model
