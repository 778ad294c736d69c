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

#include "labgatr/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

#include "labgatr/mesh_io.hpp"

namespace labgatr::run {

using nlohmann::json;

namespace {

using Handler = std::function<void(const json&)>;

// Dispatches every key of `j` to a handler; anything else is an error.
void parse_object(const json& j, const std::string& where, const std::map<std::string, Handler>& handlers) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw std::invalid_argument(where + ": unknown key '" + key + "'");
    try {
      it->second(v);
    } catch (const json::exception& e) {
      throw std::invalid_argument(where + "." + key + ": " + e.what());
    }
  }
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  return fs::weakly_canonical(p.is_absolute() ? p : base / p);
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  const bool dirs = train_dir.has_value() || val_dir.has_value();
  if (dirs == toy.has_value()) {
    throw std::invalid_argument("run config: data needs either train_dir and val_dir, or toy");
  }
  if (dirs && !(train_dir && val_dir)) throw std::invalid_argument("run config: train_dir and val_dir go together");
  if (toy && toy->train == 0) throw std::invalid_argument("run config: toy.train must be positive");
  if (out_dir.empty()) throw std::invalid_argument("run config: out_dir is empty");
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw std::invalid_argument("run config must be a JSON object");
  RunConfig c;
  // The preset is the base the model overrides apply to.
  if (j.contains("preset")) {
    if (!j.at("preset").is_string()) throw std::invalid_argument("run config: preset must be a string");
    c.preset = j.at("preset").get<std::string>();
    c.model = model::preset(c.preset);
  }
  const fs::path base = fs::absolute(base_dir);
  parse_object(j, "run config",
               {{"preset", [](const json&) {}},
                {"model", [&](const json& v) { c.model = model::config_from_json(v, c.model); }},
                {"data",
                 [&](const json& v) {
                   parse_object(v, "data",
                                {{"train_dir", [&](const json& p) { c.train_dir = resolve(p.get<std::string>(), base); }},
                                 {"val_dir", [&](const json& p) { c.val_dir = resolve(p.get<std::string>(), base); }},
                                 {"toy", [&](const json& t) {
                                    ToySpec s;
                                    parse_object(t, "data.toy",
                                                 {{"kind", [&](const json& x) {
                                                    s.kind = data::toy_kind_from_name(x.get<std::string>());
                                                  }},
                                                  {"train", [&](const json& x) { s.train = x.get<std::size_t>(); }},
                                                  {"val", [&](const json& x) { s.val = x.get<std::size_t>(); }},
                                                  {"seed", [&](const json& x) { s.seed = x.get<std::uint64_t>(); }}});
                                    c.toy = s;
                                  }}});
                 }},
                {"out_dir", [&](const json& v) { c.out_dir = v.get<std::string>(); }},
                {"serial", [&](const json& v) { c.serial = v.get<bool>(); }},
                {"threads", [&](const json& v) { c.threads = v.get<std::size_t>(); }},
                {"plan_seed", [&](const json& v) { c.plan_seed = v.get<std::uint64_t>(); }},
                {"verify", [&](const json& v) {
                   parse_object(v, "verify",
                                {{"equivariance", [&](const json& x) { c.verify.equivariance = x.get<bool>(); }},
                                 {"gradients", [&](const json& x) { c.verify.gradients = x.get<bool>(); }}});
                 }}});
  c.out_dir = resolve(c.out_dir, base);
  c.validate();
  for (const auto* d : {&c.train_dir, &c.val_dir}) {
    if (*d && !fs::is_directory(**d)) throw std::invalid_argument("run config: no such directory " + (*d)->string());
  }
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json data = json::object();
  if (c.train_dir) data["train_dir"] = c.train_dir->string();
  if (c.val_dir) data["val_dir"] = c.val_dir->string();
  if (c.toy) {
    data["toy"] = {{"kind", data::toy_kind_name(c.toy->kind)},
                   {"train", c.toy->train},
                   {"val", c.toy->val},
                   {"seed", c.toy->seed}};
  }
  return {{"preset", c.preset},
          {"model", model::config_to_json(c.model)},
          {"data", data},
          {"out_dir", c.out_dir.string()},
          {"serial", c.serial},
          {"threads", c.threads},
          {"plan_seed", c.plan_seed},
          {"verify", {{"equivariance", c.verify.equivariance}, {"gradients", c.verify.gradients}}}};
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, fs::absolute(path).parent_path());
}

Dataset load_dataset(const RunConfig& c) {
  Dataset d;
  if (c.toy) {
    d.train = data::make_toy_dataset(c.toy->kind, c.toy->train, c.toy->seed);
    d.val = data::make_toy_dataset(c.toy->kind, c.toy->val, c.toy->seed, c.toy->train);
  } else {
    d.train = mesh::load_directory(*c.train_dir);
    d.val = mesh::load_directory(*c.val_dir);
    if (d.train.empty()) throw std::runtime_error("no meshes in " + c.train_dir->string());
  }
  return d;
}

}  // namespace labgatr::run
