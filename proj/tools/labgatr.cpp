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

// labgatr: toy data, tokenisation, training, evaluation and self-checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "labgatr/dataset.hpp"
#include "labgatr/mesh_io.hpp"
#include "labgatr/model.hpp"
#include "labgatr/run_config.hpp"
#include "labgatr/tokenizer.hpp"
#include "labgatr/verify.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace labgatr;

constexpr const char* kVersion = "0.1.0";

std::string hex(const unsigned char* d, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < n; ++i) {
    s += digits[d[i] >> 4];
    s += digits[d[i] & 15];
  }
  return s;
}

// SHA-1 of "blob <size>\0" + content, as `git hash-object` prints it.
std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  return hex(md, len);
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json file_entry(const fs::path& p) {
  const auto content = read_file(p);
  return {{"path", p.string()}, {"bytes", content.size()}, {"blob_sha1", git_blob_hash(content)}};
}

// Written last, by the coordinating thread, into the run's output directory.
struct Manifest {
  std::string command;
  json config = json::object();
  std::uint64_t seed = 0;
  bool serial = false;
  json inputs = json::array();

  void add_input(const fs::path& p) { inputs.push_back(file_entry(fs::weakly_canonical(p))); }

  void write(const fs::path& out_dir) const {
    json outputs = json::array();
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(out_dir)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto entry = file_entry(f);
      entry["path"] = f.filename().string();
      outputs.push_back(entry);
    }
    const json m = {{"tool", "labgatr"},
                    {"version", kVersion},
                    {"command", command},
                    {"seed", seed},
                    {"serial", serial},
                    {"config", config},
                    {"config_hash", git_blob_hash(config.dump())},
                    {"inputs", inputs},
                    {"outputs", outputs}};
    std::ofstream(out_dir / "manifest.json") << m.dump(2) << '\n';
  }
};

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

// ---------------------------------------------------------------------------

struct ToyArgs {
  std::string kind = "surface";
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::size_t first = 0;
  std::size_t rings = 0;
  std::size_t ring_points = 0;
  std::string format = "off";
  fs::path out = "labgatr_toy";
};

int cmd_toy(const ToyArgs& a) {
  const auto kind = data::toy_kind_from_name(a.kind);
  if (a.format != "off" && a.format != "vtk") throw std::invalid_argument("--format must be off or vtk");
  if (kind == data::ToyKind::kVolume && a.format == "off") {
    throw std::invalid_argument("volume meshes need --format vtk");
  }
  fs::create_directories(a.out);
  std::size_t vertices = 0;
  for (std::size_t i = 0; i < a.count; ++i) {
    auto p = data::sample_params(kind, a.seed, a.first + i);
    if (a.rings) p.rings = a.rings;
    if (a.ring_points) p.ring_points = a.ring_points;
    const auto m = data::make_tube(kind, p);
    vertices = m.num_vertices();
    char name[64];
    std::snprintf(name, sizeof name, "%s_%05zu.%s", a.kind.c_str(), a.first + i, a.format.c_str());
    mesh::save_mesh(a.out / name, m, a.format == "off" ? mesh::Encoding::kBinary : mesh::Encoding::kAscii);
  }
  std::cout << "wrote " << a.count << " " << a.kind << " meshes (" << vertices << " vertices each) to "
            << a.out.string() << "\n";
  Manifest man{"toy", {{"kind", a.kind}, {"count", a.count}, {"first", a.first}, {"rings", a.rings},
                       {"ring_points", a.ring_points}, {"format", a.format}}, a.seed, true, json::array()};
  man.write(a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct TokenizeArgs {
  fs::path mesh;
  double ratio = 0.1;
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::string format = "json";
  fs::path out = "labgatr_tokens";
};

int cmd_tokenize(const TokenizeArgs& a) {
  const auto m = mesh::load_mesh(a.mesh);
  const auto plan = tokenizer::build_plan(m.positions, {a.ratio, a.k, a.seed});
  plan.validate();
  fs::create_directories(a.out);
  if (a.format == "json") {
    open_out(a.out / "plan.json") << tokenizer::plan_to_json(plan).dump() << '\n';
  } else if (a.format == "binary") {
    std::ofstream os(a.out / "plan.bin", std::ios::binary);
    tokenizer::write_plan_binary(os, plan);
  } else {
    throw std::invalid_argument("--format must be json or binary");
  }
  std::map<std::size_t, std::size_t> histogram;
  for (auto s : plan.cluster_sizes()) ++histogram[s];
  auto csv = open_out(a.out / "cluster_sizes.csv");
  csv << "cluster_size,count\n";
  for (const auto& [size, count] : histogram) csv << size << ',' << count << '\n';
  csv.close();
  std::cout << "n_fine " << plan.num_fine << " n_coarse " << plan.n_coarse() << " ratio "
            << fmt17(static_cast<double>(plan.n_coarse()) / static_cast<double>(plan.num_fine)) << "\n";
  Manifest man{"tokenize", {{"ratio", a.ratio}, {"k", a.k}, {"format", a.format}}, a.seed, true, json::array()};
  man.add_input(a.mesh);
  man.write(a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<double> ratio;
  std::optional<std::size_t> k;
  std::optional<std::size_t> epochs;
  bool serial = false;
  std::optional<fs::path> out;
};

std::vector<model::PreparedSample> prepare_all(const model::Model& m, const std::vector<mesh::MeshSample>& samples,
                                               std::uint64_t plan_seed) {
  std::vector<model::PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(m.prepare(s, plan_seed));
  return out;
}

int print_checks(const std::vector<verify::Check>& checks, const fs::path* csv_path) {
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << verify::format(c) << "\n";
    ok = ok && c.passed;
  }
  if (csv_path) {
    auto csv = open_out(*csv_path);
    csv << "check,value,threshold,passed,seconds\n";
    for (const auto& c : checks) {
      csv << c.name << ',' << fmt17(c.value) << ',' << fmt17(c.threshold) << ',' << (c.passed ? 1 : 0) << ','
          << fmt17(c.seconds) << '\n';
    }
  }
  return ok ? 0 : 1;
}

int cmd_train(const TrainArgs& a) {
  auto rc = run::load_run_config(a.config);
  if (a.seed) rc.model.seed = *a.seed;
  if (a.ratio) rc.model.ratio = *a.ratio;
  if (a.k) rc.model.k = *a.k;
  if (a.epochs) rc.model.epochs = *a.epochs;
  if (a.serial) rc.serial = true;
  if (a.out) rc.out_dir = fs::weakly_canonical(fs::absolute(*a.out));
  rc.validate();
  fs::create_directories(rc.out_dir);

  Manifest man{"train", run::run_config_to_json(rc), rc.model.seed, rc.serial, json::array()};
  man.add_input(a.config);
  if (rc.train_dir) {
    for (const auto& f : mesh::list_mesh_files(*rc.train_dir)) man.add_input(f);
    for (const auto& f : mesh::list_mesh_files(*rc.val_dir)) man.add_input(f);
  }
  open_out(rc.out_dir / "run_config.json") << run::run_config_to_json(rc).dump(2) << '\n';

  const auto ds = run::load_dataset(rc);
  const model::Model m(rc.model);
  const auto train_set = prepare_all(m, ds.train, rc.plan_seed);
  const auto val_set = prepare_all(m, ds.val, rc.plan_seed);
  std::cout << "train " << train_set.size() << " val " << val_set.size() << " parameters " << m.num_parameters()
            << "\n";

  std::vector<verify::Check> checks;
  verify::EquivarianceOptions eo;
  eo.blocks = rc.model.blocks;
  eo.channels = rc.model.channels;
  eo.heads = rc.model.heads;
  eo.seed = rc.model.seed;
  if (rc.verify.equivariance) {
    checks.push_back(verify::layer_equivariance(eo));
    checks.push_back(verify::model_equivariance(eo));
  }
  if (rc.verify.gradients) {
    checks.push_back(verify::layer_gradients(rc.model.seed));
    checks.push_back(verify::model_gradients(rc.model.seed));
  }
  if (!checks.empty()) {
    const auto p = rc.out_dir / "checks.csv";
    if (print_checks(checks, &p) != 0) {
      man.write(rc.out_dir);
      std::cerr << "error: verification failed; not training\n";
      return 1;
    }
  }

  auto params = m.init();
  model::TrainOptions opts;
  opts.serial = rc.serial;
  opts.threads = rc.threads;
  opts.out_dir = rc.out_dir;
  opts.on_epoch = [](const model::EpochRecord& r) {
    std::printf("epoch %zu lr %.3e train %.6g val %.6g (%.1fs)\n", r.epoch, r.lr, r.train_loss, r.val_loss,
                r.wall_seconds);
    std::fflush(stdout);
  };
  const auto result = model::train(m, params, train_set, val_set, opts);
  std::cout << "best val loss " << fmt17(result.best_val) << " at epoch " << result.best_epoch << "\n";
  man.write(rc.out_dir);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path run;
  std::optional<fs::path> checkpoint;
  std::optional<fs::path> data;
  std::optional<fs::path> config;
  std::uint64_t plan_seed = 0;
  fs::path out = "labgatr_eval";
};

int cmd_eval(const EvalArgs& a) {
  const auto cfg = model::load_model_config(a.run / "model_config.json");
  const fs::path ckpt = a.checkpoint ? *a.checkpoint : a.run / "best.ckpt";
  const auto params = autodiff::load_checkpoint(ckpt);
  const model::Model m(cfg);
  Manifest man{"eval", {{"model", model::config_to_json(cfg)}, {"plan_seed", a.plan_seed}}, cfg.seed, true,
               json::array()};
  man.add_input(a.run / "model_config.json");
  man.add_input(ckpt);

  std::vector<mesh::MeshSample> samples;
  std::vector<std::string> names;
  if (a.data.has_value() == a.config.has_value()) throw std::invalid_argument("eval needs exactly one of --data, --config");
  if (a.data) {
    for (const auto& f : mesh::list_mesh_files(*a.data)) {
      samples.push_back(mesh::load_mesh(f));
      names.push_back(f.filename().string());
      man.add_input(f);
    }
  } else {
    const auto rc = run::load_run_config(*a.config);
    man.add_input(*a.config);
    samples = run::load_dataset(rc).val;
    for (std::size_t i = 0; i < samples.size(); ++i) names.push_back("val_" + std::to_string(i));
  }
  if (samples.empty()) throw std::runtime_error("eval: no samples");

  fs::create_directories(a.out);
  auto csv = open_out(a.out / "per_sample.csv");
  json summary;
  if (cfg.task == model::Task::kVertexRegression) {
    csv << "sample,n_vertices,eps_percent,mae\n";
    double eps_sum = 0.0, mae_sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto s = m.prepare(samples[i], a.plan_seed);
      const auto y = m.predict(params, s);
      const double eps = model::metric_eps(y.data, s.target.data);
      const double mae = model::metric_mae(y.data, s.target.data);
      eps_sum += eps;
      mae_sum += mae;
      csv << names[i] << ',' << samples[i].num_vertices() << ',' << fmt17(eps) << ',' << fmt17(mae) << '\n';
    }
    const double n = static_cast<double>(samples.size());
    summary = {{"samples", samples.size()}, {"mean_eps_percent", eps_sum / n}, {"mean_mae", mae_sum / n}};
    std::printf("mean eps %.4f%%  mean MAE %.6g over %zu samples\n", eps_sum / n, mae_sum / n, samples.size());
  } else if (cfg.task == model::Task::kMeshRegression) {
    csv << "sample,prediction,target,abs_error\n";
    auto ba = open_out(a.out / "bland_altman.csv");
    ba << "sample,mean,difference\n";
    std::vector<double> diffs;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto s = m.prepare(samples[i], a.plan_seed);
      const double p = m.predict(params, s).data.at(0), t = s.target.data.at(0);
      csv << names[i] << ',' << fmt17(p) << ',' << fmt17(t) << ',' << fmt17(std::abs(p - t)) << '\n';
      ba << names[i] << ',' << fmt17(0.5 * (p + t)) << ',' << fmt17(p - t) << '\n';
      diffs.push_back(p - t);
    }
    const double n = static_cast<double>(diffs.size());
    double bias = 0.0, mae = 0.0;
    for (double d : diffs) {
      bias += d / n;
      mae += std::abs(d) / n;
    }
    double var = 0.0;
    for (double d : diffs) var += (d - bias) * (d - bias) / std::max(1.0, n - 1.0);
    const double loa = 1.96 * std::sqrt(var);
    summary = {{"samples", diffs.size()}, {"mae", mae}, {"bias", bias},
               {"lower_limit_of_agreement", bias - loa}, {"upper_limit_of_agreement", bias + loa}};
    std::printf("MAE %.6g  bias %.6g  limits of agreement [%.6g, %.6g]\n", mae, bias, bias - loa, bias + loa);
  } else {
    csv << "sample,predicted,label,correct\n";
    std::size_t correct = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto s = m.prepare(samples[i], a.plan_seed);
      const auto prob = m.predict(params, s);
      const auto k = static_cast<std::size_t>(std::max_element(prob.data.begin(), prob.data.end()) - prob.data.begin());
      correct += k == s.label;
      csv << names[i] << ',' << k << ',' << s.label << ',' << (k == s.label ? 1 : 0) << '\n';
    }
    summary = {{"samples", samples.size()}, {"accuracy", static_cast<double>(correct) / samples.size()}};
    std::printf("accuracy %zu / %zu\n", correct, samples.size());
  }
  csv.close();
  open_out(a.out / "summary.json") << summary.dump(2) << '\n';
  man.write(a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  verify::EquivarianceOptions eq;
  std::uint64_t seed = 0;
  std::size_t points = 5;
  fs::path out = "labgatr_verify";
};

int finish_checks(const std::string& command, const std::vector<verify::Check>& checks, const json& config,
                  std::uint64_t seed, const fs::path& out) {
  fs::create_directories(out);
  const auto csv = out / "checks.csv";
  const int rc = print_checks(checks, &csv);
  Manifest{command, config, seed, true, json::array()}.write(out);
  std::cout << (rc == 0 ? "all checks passed" : "some checks FAILED") << "\n";
  return rc;
}

int cmd_verify_equivariance(VerifyArgs a) {
  a.eq.seed = a.seed;
  std::vector<verify::Check> checks = {verify::layer_equivariance(a.eq), verify::model_equivariance(a.eq)};
  std::printf("max relative deviation %.3e\n", std::max(checks[0].value, checks[1].value));
  return finish_checks("verify equivariance", checks,
                       {{"blocks", a.eq.blocks}, {"tokens", a.eq.tokens}, {"channels", a.eq.channels},
                        {"heads", a.eq.heads}, {"motions", a.eq.motions}},
                       a.seed, a.out);
}

int cmd_verify_grad(const VerifyArgs& a) {
  std::vector<verify::Check> checks = {verify::layer_gradients(a.seed), verify::model_gradients(a.seed, a.points)};
  return finish_checks("verify grad", checks, {{"points", a.points}}, a.seed, a.out);
}

int cmd_selftest(const VerifyArgs& a) {
  std::vector<verify::Check> checks = {verify::algebra(a.seed), verify::embeddings(a.seed),
                                       verify::convex_combinations(a.seed)};
  return finish_checks("selftest", checks, json::object(), a.seed, a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"labgatr: geometric-algebra transformer for large meshes"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  ToyArgs toy;
  auto* c_toy = app.add_subcommand("toy", "Write procedural tube meshes");
  c_toy->add_option("--kind", toy.kind, "surface | volume | mesh-level")->capture_default_str();
  c_toy->add_option("--count", toy.count, "Number of meshes")->capture_default_str();
  c_toy->add_option("--seed", toy.seed, "Dataset seed")->capture_default_str();
  c_toy->add_option("--first", toy.first, "Index of the first sample")->capture_default_str();
  c_toy->add_option("--rings", toy.rings, "Axial layers (0 keeps the default)");
  c_toy->add_option("--ring-points", toy.ring_points, "Points per ring, surface only (0 keeps the default)");
  c_toy->add_option("--format", toy.format, "off | vtk")->capture_default_str();
  c_toy->add_option("--out", toy.out, "Output directory")->capture_default_str();

  TokenizeArgs tok;
  auto* c_tok = app.add_subcommand("tokenize", "Build a tokenisation plan for one mesh");
  c_tok->add_option("mesh", tok.mesh, "OFF or VTK mesh")->required()->check(CLI::ExistingFile);
  c_tok->add_option("--ratio", tok.ratio, "Coarse tokens per vertex")->capture_default_str();
  c_tok->add_option("--k", tok.k, "Interpolation neighbours")->check(CLI::IsMember({3, 4}))->capture_default_str();
  c_tok->add_option("--seed", tok.seed, "Start-point seed")->capture_default_str();
  c_tok->add_option("--format", tok.format, "json | binary")->capture_default_str();
  c_tok->add_option("--out", tok.out, "Output directory")->capture_default_str();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train from a run config");
  c_train->add_option("--config", tr.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  c_train->add_option("--seed", tr.seed, "Model seed override");
  c_train->add_option("--ratio", tr.ratio, "Tokenisation ratio override");
  c_train->add_option("--k", tr.k, "Interpolation neighbours override")->check(CLI::IsMember({3, 4}));
  c_train->add_option("--epochs", tr.epochs, "Epoch override");
  c_train->add_flag("--serial", tr.serial, "Single worker, bit-identical outputs");
  c_train->add_option("--out", tr.out, "Output directory override");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Per-sample metrics of a trained run");
  c_eval->add_option("--run", ev.run, "Training output directory")->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint (default: <run>/best.ckpt)")
      ->check(CLI::ExistingFile);
  c_eval->add_option("--data", ev.data, "Directory of meshes")->check(CLI::ExistingDirectory);
  c_eval->add_option("--config", ev.config, "Run config whose validation split is evaluated")
      ->check(CLI::ExistingFile);
  c_eval->add_option("--plan-seed", ev.plan_seed, "Tokenisation seed")->capture_default_str();
  c_eval->add_option("--out", ev.out, "Output directory")->capture_default_str();

  VerifyArgs ver;
  auto* c_verify = app.add_subcommand("verify", "Equivariance and gradient checks");
  c_verify->require_subcommand(1);
  auto* c_eq = c_verify->add_subcommand("equivariance", "Random rigid motions, reflections included");
  c_eq->add_option("--blocks", ver.eq.blocks, "Transformer blocks")->capture_default_str();
  c_eq->add_option("--tokens", ver.eq.tokens, "Tokens")->capture_default_str();
  c_eq->add_option("--channels", ver.eq.channels, "Channels")->capture_default_str();
  c_eq->add_option("--heads", ver.eq.heads, "Heads")->capture_default_str();
  c_eq->add_option("--motions", ver.eq.motions, "Motions")->capture_default_str();
  c_eq->add_option("--seed", ver.seed, "Seed")->capture_default_str();
  c_eq->add_option("--out", ver.out, "Output directory")->capture_default_str();
  auto* c_grad = c_verify->add_subcommand("grad", "Finite-difference gradient checks");
  c_grad->add_option("--points", ver.points, "End-to-end check points")->capture_default_str();
  c_grad->add_option("--seed", ver.seed, "Seed")->capture_default_str();
  c_grad->add_option("--out", ver.out, "Output directory")->capture_default_str();

  auto* c_self = app.add_subcommand("selftest", "Algebra, embedding and convex-combination suites");
  c_self->add_option("--seed", ver.seed, "Seed")->capture_default_str();
  c_self->add_option("--out", ver.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_toy) return cmd_toy(toy);
    if (*c_tok) return cmd_tokenize(tok);
    if (*c_train) return cmd_train(tr);
    if (*c_eval) return cmd_eval(ev);
    if (*c_eq) return cmd_verify_equivariance(ver);
    if (*c_grad) return cmd_verify_grad(ver);
    if (*c_self) return cmd_selftest(ver);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
