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

#ifndef ZEGSEG_CONFIG_H_
#define ZEGSEG_CONFIG_H_

// Run configuration and dataset manifests, both JSON. Parsing fills
// defaults for absent keys and rejects unknown keys and wrongly typed
// values.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "zegseg/evaluation.h"
#include "zegseg/inference.h"
#include "zegseg/model.h"
#include "zegseg/synth_world.h"
#include "zegseg/training.h"

namespace zegseg {

using Json = nlohmann::ordered_json;

// Parses JSON text; syntax errors are kParse.
Json ParseJson(const std::string& text, const std::string& what);
// Two-space indented dump with a trailing newline.
std::string DumpJson(const Json& j);

const char* SplitModeName(SplitMode mode);
SplitMode ParseSplitMode(const std::string& name);

// Scene and palette settings; the world itself is rebuilt from these and
// the run seed.
struct WorldSettings {
  DefaultWorldOptions options;
  int height = 64;
  int width = 64;
  int min_objects = 1;
  int max_objects = 3;
  int min_object_size = 14;
  int max_object_size = 28;
  int min_gap = 3;
  int cell_size = 8;
  double cell_amplitude = 0.0;
  double text_noise = 0.0;
  double image_noise = 0.0;

  WorldConfig Build(uint64_t seed) const;
};

struct DataSettings {
  int num_images = 200;
  uint64_t first_index = 0;
  // "seen": objects from seen classes only (training data); "all".
  std::string classes = "seen";
  // "ensemble" (sixteen templates) or "single".
  std::string templates = "ensemble";
};

struct TrainSettings {
  LossWeights weights;
  OptimizerConfig optimizer;
  bool deep_supervision = false;
};

struct InferSettings {
  ClassifierConfig classifier;
  InferenceConfig inference;
  SplitMode mode = SplitMode::kGzs3;
};

struct EvalSettings {
  SplitMode mode = SplitMode::kGzs3;
  // Boundary tolerance in pixels; 0 picks the default for the image size.
  double theta = 0.0;
};

struct RunConfig {
  uint64_t seed = 0;
  WorldSettings world;
  DataSettings data;
  ModelConfig model;  // model.seed follows `seed`
  TrainSettings train;
  InferSettings infer;
  EvalSettings eval;
  HeadBenchmarkConfig bench;  // bench.seed follows `seed`

  void Validate() const;
  TrainConfig MakeTrainConfig() const;
  PromptTemplateSet Templates() const;
};

Json ToJson(const RunConfig& cfg);
RunConfig RunConfigFromJson(const Json& j);
RunConfig LoadRunConfig(const std::string& path);

Json ModelConfigToJson(const ModelConfig& cfg);
ModelConfig ModelConfigFromJson(const Json& j);

Json WorldSettingsToJson(const WorldSettings& w);
WorldSettings WorldSettingsFromJson(const Json& j);

struct ManifestEntry {
  std::string image;   // relative to the manifest directory
  std::string labels;  // relative to the manifest directory
};

struct Manifest {
  std::string root;  // directory holding the manifest (not serialised)
  std::vector<std::string> vocabulary;
  ClassSplit split;
  std::vector<ManifestEntry> samples;
  std::string embeddings;  // TSV, relative; may be empty
  // Generator settings, present for synthetic data so the image oracle can
  // be rebuilt.
  bool has_world = false;
  uint64_t world_seed = 0;
  WorldSettings world;

  std::string Resolve(const std::string& relative) const;
  void Validate() const;
};

Json ToJson(const Manifest& m);
Manifest ManifestFromJson(const Json& j, const std::string& root);
// Reads and validates; every referenced file must exist.
Manifest LoadManifest(const std::string& path);

// Loads every sample. Label maps must match their images in size and use
// vocabulary indices or kIgnore.
Dataset LoadDataset(const Manifest& m);

}  // namespace zegseg

#endif  // ZEGSEG_CONFIG_H_
