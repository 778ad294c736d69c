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

#include <fstream>

#include <gtest/gtest.h>

#include "labgatr/run_config.hpp"

namespace labgatr::run {
namespace {

using nlohmann::json;

class RunConfigTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "labgatr_test_run_config";
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "train");
    fs::create_directories(dir_ / "val");
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(RunConfigTest, PresetThenOverrides) {
  const auto c = run_config_from_json(json::parse(R"({
    "preset": "surface-wss",
    "model": {"epochs": 7, "ratio": 0.2},
    "data": {"toy": {"kind": "surface", "train": 5, "val": 2, "seed": 3}},
    "serial": true
  })"),
                                      dir_);
  auto want = model::preset("surface-wss");
  want.epochs = 7;
  want.ratio = 0.2;
  EXPECT_EQ(c.model, want);
  ASSERT_TRUE(c.toy.has_value());
  EXPECT_EQ(c.toy->kind, data::ToyKind::kSurface);
  EXPECT_EQ(c.toy->seed, 3u);
  EXPECT_TRUE(c.serial);
  EXPECT_TRUE(c.out_dir.is_absolute());
}

TEST_F(RunConfigTest, PathsResolveAgainstConfigDirectory) {
  std::ofstream(dir_ / "run.json") << R"({"data": {"train_dir": "train", "val_dir": "./val"}, "out_dir": "out"})";
  const auto c = load_run_config(dir_ / "run.json");
  EXPECT_EQ(*c.train_dir, fs::weakly_canonical(dir_ / "train"));
  EXPECT_EQ(*c.val_dir, fs::weakly_canonical(dir_ / "val"));
  EXPECT_EQ(c.out_dir, fs::weakly_canonical(dir_ / "out"));
  // Roundtrip through JSON keeps the resolved paths.
  EXPECT_EQ(run_config_from_json(run_config_to_json(c), "/"), c);
}

TEST_F(RunConfigTest, RejectsBadDocuments) {
  const char* bad[] = {
      R"({"data": {"toy": {}}, "extra": 1})",
      R"({"data": {"toy": {"kind": "surface", "colour": 1}}})",
      R"({"data": {"toy": {"kind": "torus"}}})",
      R"({"model": {"chanels": 8}, "data": {"toy": {}}})",
      R"({"preset": "tiny", "data": {"toy": {}}})",
      R"({"preset": 3, "data": {"toy": {}}})",
      R"({"data": {}})",
      R"({"data": {"train_dir": "train"}})",
      R"({"data": {"train_dir": "train", "val_dir": "missing"}})",
      R"({"data": {"toy": {}, "train_dir": "train", "val_dir": "val"}})",
      R"({"data": {"toy": {}}, "serial": "yes"})",
      R"({"data": {"toy": {}}, "verify": {"all": true}})",
      R"([1, 2])",
  };
  for (const char* doc : bad) EXPECT_THROW(run_config_from_json(json::parse(doc), dir_), std::invalid_argument) << doc;
  EXPECT_THROW(load_run_config(dir_ / "absent.json"), std::runtime_error);
  std::ofstream(dir_ / "broken.json") << "{";
  EXPECT_THROW(load_run_config(dir_ / "broken.json"), std::invalid_argument);
}

TEST_F(RunConfigTest, ToyDatasetSplitsAreDisjoint) {
  RunConfig c;
  c.toy = ToySpec{data::ToyKind::kSurface, 3, 2, 5};
  const auto d = load_dataset(c);
  ASSERT_EQ(d.train.size(), 3u);
  ASSERT_EQ(d.val.size(), 2u);
  EXPECT_EQ(d.val[0], data::make_toy_dataset(data::ToyKind::kSurface, 1, 5, 3)[0]);
}

}  // namespace
}  // namespace labgatr::run
