// Copyright 2026 The ZegSeg Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "zegseg/c_api.h"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

fs::path Scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / "zegseg_tests" /
               (std::string("cli.") + info->name() + "." + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI with `args`, capturing stdout and stderr.
CliRun Cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string(ZEGSEG_CLI_PATH) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

std::string Small() {
  return "--seed 1 --set world.height=32 --set world.width=32"
         " --set world.min_object_size=8 --set world.max_object_size=12"
         " --set model.num_queries=4 --set model.decoder_dim=16"
         " --set model.decoder_layers=1 --set model.pixel_feature_dim=8"
         " --set model.encoder_channels=4";
}

std::vector<std::string> FilesUnder(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Cli, GenDataEmptyAndDeterministic) {
  const fs::path d = Scratch("gen");
  CliRun r = Cli("gen-data " + Small() + " --num-images 0 --out " +
                  (d / "empty").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(Json::parse(Slurp(d / "empty/manifest.json"))["samples"].empty());

  for (const char* sub : {"a", "b"}) {
    CliRun g = Cli("gen-data " + Small() + " --num-images 10 --out " +
                    (d / sub).string(), d);
    ASSERT_EQ(g.code, 0) << g.err;
  }
  const auto files = FilesUnder(d / "a");
  EXPECT_EQ(files, FilesUnder(d / "b"));
  for (const auto& f : files)
    EXPECT_EQ(Slurp(d / "a" / f), Slurp(d / "b" / f)) << f;
  Json m = Json::parse(Slurp(d / "a/manifest.json"));
  ASSERT_EQ(m["samples"].size(), 10u);
  for (const auto& s : m["samples"]) {
    EXPECT_TRUE(fs::exists(d / "a" / s["image"].get<std::string>()));
    EXPECT_TRUE(fs::exists(d / "a" / s["labels"].get<std::string>()));
  }
}

TEST(Cli, ExitCodes) {
  const fs::path d = Scratch("codes");
  CliRun missing = Cli("train " + Small() + " --manifest " +
                        (d / "none.json").string() + " --out " +
                        (d / "m.ckpt").string(), d);
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("zegseg:"), std::string::npos);
  EXPECT_EQ(Cli("train --bogus", d).code, 3);
  EXPECT_EQ(Cli("gen-data --set nope.key=1 --out " + (d / "x").string(), d).code,
            3);
  EXPECT_EQ(Cli("bench-head --set bench.repetitions=1", d).code, 3);

  ASSERT_EQ(Cli("gen-data " + Small() + " --classes all --num-images 6 --out " +
                    (d / "all").string(), d).code, 0);
  CliRun unseen = Cli("train " + Small() + " --steps 1 --manifest " +
                       (d / "all/manifest.json").string() + " --out " +
                       (d / "m.ckpt").string(), d);
  EXPECT_EQ(unseen.code, 3);
  EXPECT_NE(unseen.err.find("seen"), std::string::npos);
  EXPECT_FALSE(fs::exists(d / "m.ckpt"));
}

TEST(Cli, TrainInferEvalPipeline) {
  const fs::path d = Scratch("pipe");
  ASSERT_EQ(Cli("gen-data " + Small() + " --num-images 4 --out " +
                    (d / "train").string(), d).code, 0);
  ASSERT_EQ(Cli("gen-data " + Small() +
                    " --classes all --num-images 3 --set data.first_index=1000"
                    " --out " + (d / "test").string(), d).code, 0);
  CliRun t = Cli("train " + Small() + " --steps 4 --manifest " +
                  (d / "train/manifest.json").string() + " --out " +
                  (d / "m.ckpt").string(), d);
  ASSERT_EQ(t.code, 0) << t.err;
  Json summary = Json::parse(t.out);
  EXPECT_EQ(summary["steps"], 4);
  EXPECT_TRUE(fs::exists(d / "m.ckpt.loss.csv"));

  for (const char* out : {"p1", "p2"}) {
    CliRun i = Cli("infer " + Small() + " --checkpoint " + (d / "m.ckpt").string() +
                    " --input " + (d / "test/manifest.json").string() +
                    " --variant full --set infer.subimage_resolution=32 --out " +
                    (d / out).string(), d);
    ASSERT_EQ(i.code, 0) << i.err;
  }
  const auto files = FilesUnder(d / "p1");
  EXPECT_EQ(files.size(), 6u);  // label map plus sidecar per image
  for (const auto& f : files)
    EXPECT_EQ(Slurp(d / "p1" / f), Slurp(d / "p2" / f)) << f;

  CliRun e = Cli("eval " + Small() + " --pred " + (d / "p1").string() +
                  " --manifest " + (d / "test/manifest.json").string() +
                  " --report " + (d / "r.json").string(), d);
  ASSERT_EQ(e.code, 0) << e.err;
  Json rep = Json::parse(e.out);
  EXPECT_EQ(Json::parse(Slurp(d / "r.json")), rep);
  EXPECT_GE(rep["harmonic"].get<double>(), 0.0);
  EXPECT_LE(rep["harmonic"].get<double>(), 1.0);

  // Ground truth as prediction.
  CliRun perfect = Cli("eval " + Small() + " --pred " +
                        (d / "test/labels").string() + " --manifest " +
                        (d / "test/manifest.json").string(), d);
  ASSERT_EQ(perfect.code, 0) << perfect.err;
  EXPECT_EQ(Json::parse(perfect.out)["harmonic"], 1.0);
  CliRun pb = Cli("eval-boundary " + Small() + " --pred " +
                   (d / "test/labels").string() + " --manifest " +
                   (d / "test/manifest.json").string(), d);
  ASSERT_EQ(pb.code, 0) << pb.err;
  EXPECT_EQ(Json::parse(pb.out)["f"], 1.0);

  // Blank predictions: one label everywhere.
  fs::create_directories(d / "blank");
  for (const auto& e2 : fs::directory_iterator(d / "test/labels")) {
    std::string bytes = Slurp(e2.path());
    const size_t header = bytes.size() - 32 * 32;
    std::fill(bytes.begin() + header, bytes.end(), '\0');
    std::ofstream(d / "blank" / e2.path().filename(), std::ios::binary) << bytes;
  }
  CliRun blank = Cli("eval-boundary " + Small() + " --pred " +
                      (d / "blank").string() + " --manifest " +
                      (d / "test/manifest.json").string(), d);
  ASSERT_EQ(blank.code, 0) << blank.err;
  EXPECT_EQ(Json::parse(blank.out)["f"], 0.0);

  // A prediction of the wrong size is reported with its path.
  std::ofstream(d / "blank" / fs::directory_iterator(d / "blank")->path().filename(),
                std::ios::binary)
      << "P5\n2 2\n255\n" << std::string(4, '\0');
  CliRun bad = Cli("eval " + Small() + " --pred " + (d / "blank").string() +
                    " --manifest " + (d / "test/manifest.json").string(), d);
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.err.find("blank"), std::string::npos) << bad.err;
}

TEST(Cli, BenchHeadCsv) {
  const fs::path d = Scratch("bench");
  CliRun b = Cli("bench-head --set bench.k_values=[1,10]"
              " --set bench.min_rep_seconds=0.001 --csv " +
                  (d / "t.csv").string(), d);
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(b.out.rfind("k,t_segment,t_pixel\n1,", 0), 0u) << b.out;
  EXPECT_EQ(Slurp(d / "t.csv"), b.out);
}

TEST(CApi, ConfigHandles) {
  zs_config* cfg = nullptr;
  ASSERT_EQ(zs_config_create(nullptr, &cfg), ZS_OK);
  EXPECT_EQ(zs_config_set(cfg, "train.optimizer.steps", "7"), ZS_OK);
  EXPECT_EQ(zs_config_set(cfg, "train.optimizer.stepz", "7"), ZS_ERR_CONFIG);
  EXPECT_NE(std::string(zs_last_error()).find("stepz"), std::string::npos);
  EXPECT_EQ(zs_config_set(cfg, "infer.gamma", "\"x\""), ZS_ERR_CONFIG);
  char* text = nullptr;
  ASSERT_EQ(zs_config_to_json(cfg, &text), ZS_OK);
  EXPECT_EQ(Json::parse(text)["train"]["optimizer"]["steps"], 7);
  zs_string_free(text);
  zs_config_free(cfg);

  zs_config* bad = nullptr;
  EXPECT_EQ(zs_config_create("{\"seed\": ", &bad), ZS_ERR_IO);
  EXPECT_EQ(bad, nullptr);
  EXPECT_EQ(zs_config_load("/nonexistent/cfg.json", &bad), ZS_ERR_IO);
  EXPECT_STRNE(zs_version(), "");
}

TEST(CApi, TrainSaveLoadPredict) {
  const fs::path d = Scratch("capi");
  zs_config* cfg = nullptr;
  const std::string json =
      R"({"seed": 2, "world": {"height": 32, "width": 32,
          "min_object_size": 8, "max_object_size": 12},
          "data": {"num_images": 2},
          "model": {"num_queries": 4, "decoder_dim": 16, "decoder_layers": 1,
                    "pixel_feature_dim": 8, "encoder_channels": 4},
          "train": {"optimizer": {"steps": 2}}})";
  ASSERT_EQ(zs_config_create(json.c_str(), &cfg), ZS_OK) << zs_last_error();
  ASSERT_EQ(zs_gen_data(cfg, (d / "data").c_str(), nullptr), ZS_OK)
      << zs_last_error();
  char* out = nullptr;
  ASSERT_EQ(zs_train(cfg, (d / "data/manifest.json").c_str(),
                     (d / "m.ckpt").c_str(), (d / "loss.csv").c_str(), nullptr,
                     &out),
            ZS_OK)
      << zs_last_error();
  EXPECT_EQ(Json::parse(out)["steps"], 2);
  zs_string_free(out);
  zs_config_free(cfg);

  zs_model* m = nullptr;
  ASSERT_EQ(zs_model_load((d / "m.ckpt").c_str(), &m), ZS_OK);
  ASSERT_EQ(zs_model_save(m, (d / "copy.ckpt").c_str()), ZS_OK);
  EXPECT_EQ(Slurp(d / "m.ckpt"), Slurp(d / "copy.ckpt"));
  const int n = zs_model_num_queries(m), e = zs_model_semantic_dim(m);
  EXPECT_EQ(n, 4);
  EXPECT_EQ(e, 16);
  std::vector<double> pixels(16 * 16 * 3);
  for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = (i % 17) / 16.0;
  std::vector<double> masks(n * 16 * 16), sem(n * e), masks2(masks.size()),
      sem2(sem.size());
  ASSERT_EQ(zs_model_predict(m, 16, 16, 3, pixels.data(), masks.data(),
                             sem.data()),
            ZS_OK)
      << zs_last_error();
  ASSERT_EQ(zs_model_predict(m, 16, 16, 3, pixels.data(), masks2.data(),
                             sem2.data()),
            ZS_OK);
  EXPECT_EQ(masks, masks2);
  EXPECT_EQ(sem, sem2);
  for (double v : masks) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(zs_model_predict(m, 16, 16, 2, pixels.data(), masks.data(),
                             sem.data()),
            ZS_ERR_CONFIG);
  zs_model_free(m);
  EXPECT_EQ(zs_model_load((d / "missing.ckpt").c_str(), &m), ZS_ERR_IO);
}

}  // namespace
