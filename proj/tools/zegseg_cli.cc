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

// zegseg: command-line front end over the C API.
//
//   zegseg gen-data      --out DIR
//   zegseg train         --manifest M --out CKPT
//   zegseg infer         --checkpoint CKPT --input M|IMAGE --out DIR
//   zegseg eval          --pred DIR --manifest M [--mode gzs3|zs3]
//   zegseg eval-boundary --pred DIR --manifest M [--theta T]
//   zegseg bench-head    [--csv FILE]
//
// Every command takes --config FILE and any number of --set key=json
// overrides; the dedicated flags below are shorthands for common keys.
// Exit codes: 0 ok, 2 I/O or parse error, 3 configuration or contract
// violation, 4 numeric failure.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zegseg/c_api.h"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<long long> seed;
};

struct Shorthand {
  const char* key;
  std::string value;  // JSON text
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration");
  app->add_option("--set", c.sets, "override, e.g. train.optimizer.steps=500")
      ->take_all();
  app->add_option("--seed", c.seed, "run seed");
}

std::string Quote(const std::string& s) { return "\"" + s + "\""; }

int Fail(int code) {
  std::fprintf(stderr, "zegseg: %s\n", zs_last_error());
  return code;
}

// Builds the config: file, then --set overrides, then shorthands.
int MakeConfig(const Common& c, const std::vector<Shorthand>& extra,
               zs_config** out) {
  int rc = c.config.empty() ? zs_config_create(nullptr, out)
                            : zs_config_load(c.config.c_str(), out);
  if (rc) return Fail(rc);
  auto set = [&](const std::string& key, const std::string& value) {
    int r = zs_config_set(*out, key.c_str(), value.c_str());
    return r ? Fail(r) : 0;
  };
  for (const auto& kv : c.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "zegseg: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return ZS_ERR_CONFIG;
    }
    if (int r = set(kv.substr(0, eq), kv.substr(eq + 1))) return r;
  }
  if (c.seed)
    if (int r = set("seed", std::to_string(*c.seed))) return r;
  for (const auto& s : extra)
    if (!s.value.empty())
      if (int r = set(s.key, s.value)) return r;
  return 0;
}

int Emit(int rc, char* text) {
  if (rc) return Fail(rc);
  if (text) {
    std::fputs(text, stdout);
    zs_string_free(text);
  }
  return 0;
}

template <typename T>
std::string Num(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot semantic segmentation with decoupled segment "
               "classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(zs_version()));

  Common common;
  std::string out, manifest, checkpoint, input, pred, embeddings, report,
      loss_csv, csv;
  std::optional<int> num_images, steps;
  std::optional<double> lr, gamma, lambda, theta;
  std::string variant, subimage_mode, mode, kind, classes;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  AddCommon(gen, common);
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--num-images", num_images);
  gen->add_option("--classes", classes, "seen | all");

  auto* train = app.add_subcommand("train", "train on seen classes");
  AddCommon(train, common);
  train->add_option("--manifest", manifest)->required();
  train->add_option("--out", checkpoint, "checkpoint path")->required();
  train->add_option("--loss-csv", loss_csv, "default: <out>.loss.csv");
  train->add_option("--embeddings", embeddings, "embedding TSV");
  train->add_option("--model", kind, "segment | pixel");
  train->add_option("--steps", steps);
  train->add_option("--lr", lr);

  auto* infer = app.add_subcommand("infer", "predict label maps");
  AddCommon(infer, common);
  infer->add_option("--checkpoint", checkpoint)->required();
  infer->add_option("--input", input, "manifest .json or one image")
      ->required();
  infer->add_option("--out", out, "output directory")->required();
  infer->add_option("--embeddings", embeddings, "embedding TSV");
  infer->add_option("--variant", variant, "seg | img | full");
  infer->add_option("--gamma", gamma);
  infer->add_option("--lambda", lambda);
  infer->add_option("--subimage-mode", subimage_mode,
                    "crop | mask | crop_and_mask");
  infer->add_option("--mode", mode, "gzs3 | zs3");

  auto* eval = app.add_subcommand("eval", "seen/unseen/harmonic mIoU");
  AddCommon(eval, common);
  eval->add_option("--pred", pred, "prediction directory")->required();
  eval->add_option("--manifest", manifest)->required();
  eval->add_option("--mode", mode, "gzs3 | zs3");
  eval->add_option("--report", report, "also write the report here");

  auto* evalb = app.add_subcommand("eval-boundary", "boundary P/R/F");
  AddCommon(evalb, common);
  evalb->add_option("--pred", pred, "prediction directory")->required();
  evalb->add_option("--manifest", manifest)->required();
  evalb->add_option("--theta", theta, "tolerance in pixels");
  evalb->add_option("--report", report, "also write the report here");

  auto* bench = app.add_subcommand("bench-head", "classification-head timing");
  AddCommon(bench, common);
  bench->add_option("--csv", csv, "also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ZS_ERR_CONFIG;
  }

  std::vector<Shorthand> extra{
      {"data.num_images", Num(num_images)},
      {"data.classes", classes.empty() ? "" : Quote(classes)},
      {"train.optimizer.steps", Num(steps)},
      {"train.optimizer.learning_rate", lr ? std::to_string(*lr) : ""},
      {"model.kind", kind.empty() ? "" : Quote(kind)},
      {"infer.variant", variant.empty() ? "" : Quote(variant)},
      {"infer.gamma", gamma ? std::to_string(*gamma) : ""},
      {"infer.lambda", lambda ? std::to_string(*lambda) : ""},
      {"infer.subimage_mode",
       subimage_mode.empty() ? "" : Quote(subimage_mode)},
      {"eval.theta", theta ? std::to_string(*theta) : ""}};
  if (!mode.empty())
    extra.push_back({*infer ? "infer.mode" : "eval.mode", Quote(mode)});

  zs_config* cfg = nullptr;
  if (int rc = MakeConfig(common, extra, &cfg)) {
    zs_config_free(cfg);
    return rc;
  }
  auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
  char* text = nullptr;
  int rc = 0;
  if (*gen) {
    rc = zs_gen_data(cfg, out.c_str(), &text);
  } else if (*train) {
    rc = zs_train(cfg, manifest.c_str(), checkpoint.c_str(), opt(loss_csv),
                  opt(embeddings), &text);
  } else if (*infer) {
    rc = zs_infer(cfg, checkpoint.c_str(), input.c_str(), out.c_str(),
                  opt(embeddings), &text);
  } else if (*eval) {
    rc = zs_eval(cfg, pred.c_str(), manifest.c_str(), opt(report), &text);
  } else if (*evalb) {
    rc = zs_eval_boundary(cfg, pred.c_str(), manifest.c_str(), opt(report),
                          &text);
  } else if (*bench) {
    rc = zs_bench_head(cfg, opt(csv), &text);
  }
  zs_config_free(cfg);
  return Emit(rc, text);
}
