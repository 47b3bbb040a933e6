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

#include "zegseg/config.h"

#include <filesystem>
#include <set>

#include "zegseg/error.h"
#include "zegseg/io.h"

namespace zegseg {
namespace {

// Reads members of one JSON object, remembering which keys were used so
// that leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where)
      : j_(j), where_(std::move(where)) {
    ZS_CHECK(j_.is_object(), ErrorCode::kConfig,
             where_ + ": expected a JSON object");
  }

  template <typename T>
  void Get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      Fail(ErrorCode::kConfig,
           where_ + "." + key + ": wrong type (" + it->type_name() + ")");
    }
  }

  const Json* Child(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      ZS_CHECK(used_.count(it.key()), ErrorCode::kConfig,
               where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

// Reads an enum stored as its name.
template <typename E, typename ParseFn>
void GetEnum(ObjectReader& r, const char* key, E& out, ParseFn parse) {
  std::string name;
  bool present = false;
  if (const Json* c = r.Child(key)) {
    ZS_CHECK(c->is_string(), ErrorCode::kConfig,
             std::string(key) + ": expected a string");
    name = c->get<std::string>();
    present = true;
  }
  if (present) out = parse(name);
}

Json WeightsToJson(const LossWeights& w) {
  return Json{{"cls", w.cls},
              {"dice", w.dice},
              {"focal", w.focal},
              {"no_object", w.no_object},
              {"focal_alpha", w.focal_alpha},
              {"focal_gamma", w.focal_gamma},
              {"dice_eps", w.dice_eps}};
}

LossWeights WeightsFromJson(const Json& j) {
  LossWeights w;
  ObjectReader r(j, "train.weights");
  r.Get("cls", w.cls);
  r.Get("dice", w.dice);
  r.Get("focal", w.focal);
  r.Get("no_object", w.no_object);
  r.Get("focal_alpha", w.focal_alpha);
  r.Get("focal_gamma", w.focal_gamma);
  r.Get("dice_eps", w.dice_eps);
  r.Finish();
  return w;
}

Json OptimizerToJson(const OptimizerConfig& o) {
  return Json{{"learning_rate", o.learning_rate},
              {"beta1", o.beta1},
              {"beta2", o.beta2},
              {"epsilon", o.epsilon},
              {"weight_decay", o.weight_decay},
              {"grad_clip_norm", o.grad_clip_norm},
              {"steps", o.steps},
              {"batch_size", o.batch_size}};
}

OptimizerConfig OptimizerFromJson(const Json& j) {
  OptimizerConfig o;
  ObjectReader r(j, "train.optimizer");
  r.Get("learning_rate", o.learning_rate);
  r.Get("beta1", o.beta1);
  r.Get("beta2", o.beta2);
  r.Get("epsilon", o.epsilon);
  r.Get("weight_decay", o.weight_decay);
  r.Get("grad_clip_norm", o.grad_clip_norm);
  r.Get("steps", o.steps);
  r.Get("batch_size", o.batch_size);
  r.Finish();
  return o;
}

Json ModelToJsonImpl(const ModelConfig& m, bool with_seed) {
  Json j{{"kind", ModelKindName(m.kind)},
         {"num_queries", m.num_queries},
         {"decoder_dim", m.decoder_dim},
         {"decoder_layers", m.decoder_layers},
         {"num_heads", m.num_heads},
         {"pixel_feature_dim", m.pixel_feature_dim},
         {"feature_stride", m.feature_stride},
         {"semantic_dim", m.semantic_dim},
         {"encoder_channels", m.encoder_channels},
         {"ffn_dim", m.ffn_dim},
         {"mask_hidden_dim", m.mask_hidden_dim},
         {"image_channels", m.image_channels},
         {"temperature", m.temperature}};
  if (with_seed) j["seed"] = m.seed;
  return j;
}

ModelConfig ModelFromJsonImpl(const Json& j, bool with_seed) {
  ModelConfig m;
  ObjectReader r(j, "model");
  GetEnum(r, "kind", m.kind, ParseModelKind);
  r.Get("num_queries", m.num_queries);
  r.Get("decoder_dim", m.decoder_dim);
  r.Get("decoder_layers", m.decoder_layers);
  r.Get("num_heads", m.num_heads);
  r.Get("pixel_feature_dim", m.pixel_feature_dim);
  r.Get("feature_stride", m.feature_stride);
  r.Get("semantic_dim", m.semantic_dim);
  r.Get("encoder_channels", m.encoder_channels);
  r.Get("ffn_dim", m.ffn_dim);
  r.Get("mask_hidden_dim", m.mask_hidden_dim);
  r.Get("image_channels", m.image_channels);
  r.Get("temperature", m.temperature);
  if (with_seed) r.Get("seed", m.seed);
  r.Finish();
  return m;
}

Json SplitToJson(const ClassSplit& s) {
  return Json{{"seen", s.seen},
              {"unseen", s.unseen},
              {"mode", SplitModeName(s.mode)}};
}

ClassSplit SplitFromJson(const Json& j) {
  ClassSplit s;
  ObjectReader r(j, "split");
  r.Get("seen", s.seen);
  r.Get("unseen", s.unseen);
  GetEnum(r, "mode", s.mode, ParseSplitMode);
  r.Finish();
  return s;
}

}  // namespace

Json ParseJson(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kParse, what + ": " + e.what());
  }
}

std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

const char* SplitModeName(SplitMode mode) {
  return mode == SplitMode::kGzs3 ? "gzs3" : "zs3";
}

SplitMode ParseSplitMode(const std::string& name) {
  if (name == "gzs3" || name == "GZS3") return SplitMode::kGzs3;
  if (name == "zs3" || name == "ZS3") return SplitMode::kZs3;
  Fail(ErrorCode::kConfig, "unknown split mode '" + name + "'");
}

WorldConfig WorldSettings::Build(uint64_t seed) const {
  WorldConfig w = MakeDefaultWorld(seed, options);
  w.height = height;
  w.width = width;
  w.min_objects = min_objects;
  w.max_objects = max_objects;
  w.min_object_size = min_object_size;
  w.max_object_size = max_object_size;
  w.min_gap = min_gap;
  w.cell_size = cell_size;
  w.cell_amplitude = cell_amplitude;
  w.text_noise = text_noise;
  w.image_noise = image_noise;
  w.Validate();
  return w;
}

Json WorldSettingsToJson(const WorldSettings& w) {
  const DefaultWorldOptions& o = w.options;
  return Json{{"height", w.height},
              {"width", w.width},
              {"min_objects", w.min_objects},
              {"max_objects", w.max_objects},
              {"min_object_size", w.min_object_size},
              {"max_object_size", w.max_object_size},
              {"min_gap", w.min_gap},
              {"cell_size", w.cell_size},
              {"cell_amplitude", w.cell_amplitude},
              {"text_noise", w.text_noise},
              {"image_noise", w.image_noise},
              {"palette",
               {{"embed_dim", o.embed_dim},
                {"latent_dim", o.latent_dim},
                {"num_parts", o.num_parts},
                {"parts_per_class", o.parts_per_class},
                {"num_seen_objects", o.num_seen_objects},
                {"num_unseen", o.num_unseen},
                {"unseen_part_sharing", o.unseen_part_sharing},
                {"max_cosine", o.max_cosine},
                {"min_part_cosine", o.min_part_cosine},
                {"color_scale", o.color_scale},
                {"min_amplitude", o.min_amplitude},
                {"max_amplitude", o.max_amplitude}}}};
}

WorldSettings WorldSettingsFromJson(const Json& j) {
  WorldSettings w;
  ObjectReader r(j, "world");
  r.Get("height", w.height);
  r.Get("width", w.width);
  r.Get("min_objects", w.min_objects);
  r.Get("max_objects", w.max_objects);
  r.Get("min_object_size", w.min_object_size);
  r.Get("max_object_size", w.max_object_size);
  r.Get("min_gap", w.min_gap);
  r.Get("cell_size", w.cell_size);
  r.Get("cell_amplitude", w.cell_amplitude);
  r.Get("text_noise", w.text_noise);
  r.Get("image_noise", w.image_noise);
  if (const Json* p = r.Child("palette")) {
    DefaultWorldOptions& o = w.options;
    ObjectReader pr(*p, "world.palette");
    pr.Get("embed_dim", o.embed_dim);
    pr.Get("latent_dim", o.latent_dim);
    pr.Get("num_parts", o.num_parts);
    pr.Get("parts_per_class", o.parts_per_class);
    pr.Get("num_seen_objects", o.num_seen_objects);
    pr.Get("num_unseen", o.num_unseen);
    pr.Get("unseen_part_sharing", o.unseen_part_sharing);
    pr.Get("max_cosine", o.max_cosine);
    pr.Get("min_part_cosine", o.min_part_cosine);
    pr.Get("color_scale", o.color_scale);
    pr.Get("min_amplitude", o.min_amplitude);
    pr.Get("max_amplitude", o.max_amplitude);
    pr.Finish();
  }
  r.Finish();
  return w;
}

Json ModelConfigToJson(const ModelConfig& cfg) {
  return ModelToJsonImpl(cfg, true);
}

ModelConfig ModelConfigFromJson(const Json& j) {
  return ModelFromJsonImpl(j, true);
}

void RunConfig::Validate() const {
  ZS_CHECK(data.num_images >= 0, ErrorCode::kConfig,
           "data.num_images must be >= 0");
  ZS_CHECK(data.classes == "seen" || data.classes == "all",
           ErrorCode::kConfig, "data.classes must be 'seen' or 'all'");
  ZS_CHECK(data.templates == "ensemble" || data.templates == "single",
           ErrorCode::kConfig, "data.templates must be 'ensemble' or 'single'");
  ZS_CHECK(world.text_noise >= 0 && world.image_noise >= 0 &&
               world.cell_amplitude >= 0,
           ErrorCode::kConfig, "noise levels must be >= 0");
  ZS_CHECK(eval.theta >= 0, ErrorCode::kConfig, "eval.theta must be >= 0");
  model.Validate();
  train.weights.Validate();
  train.optimizer.Validate();
  infer.classifier.Validate();
  infer.inference.Validate();
  bench.Validate();
}

TrainConfig RunConfig::MakeTrainConfig() const {
  TrainConfig tc;
  tc.model = model;
  tc.model.seed = seed;
  tc.weights = train.weights;
  tc.optimizer = train.optimizer;
  tc.deep_supervision = train.deep_supervision;
  tc.seed = seed;
  return tc;
}

PromptTemplateSet RunConfig::Templates() const {
  return data.templates == "single" ? SinglePromptTemplate()
                                    : DefaultPromptTemplates();
}

Json ToJson(const RunConfig& cfg) {
  const InferenceConfig& ic = cfg.infer.inference;
  return Json{
      {"seed", cfg.seed},
      {"world", WorldSettingsToJson(cfg.world)},
      {"data",
       {{"num_images", cfg.data.num_images},
        {"first_index", cfg.data.first_index},
        {"classes", cfg.data.classes},
        {"templates", cfg.data.templates}}},
      {"model", ModelToJsonImpl(cfg.model, false)},
      {"train",
       {{"weights", WeightsToJson(cfg.train.weights)},
        {"optimizer", OptimizerToJson(cfg.train.optimizer)},
        {"deep_supervision", cfg.train.deep_supervision}}},
      {"infer",
       {{"temperature", cfg.infer.classifier.temperature},
        {"include_no_object", cfg.infer.classifier.include_no_object},
        {"variant", VariantName(ic.variant)},
        {"gamma", ic.gamma},
        {"lambda", ic.lambda},
        {"subimage_mode", SubimageModeName(ic.subimage_mode)},
        {"subimage_resolution", ic.subimage_resolution},
        {"fill", ic.fill},
        {"threshold", ic.threshold},
        {"mode", SplitModeName(cfg.infer.mode)}}},
      {"eval",
       {{"mode", SplitModeName(cfg.eval.mode)}, {"theta", cfg.eval.theta}}},
      {"bench",
       {{"num_queries", cfg.bench.num_queries},
        {"height", cfg.bench.height},
        {"width", cfg.bench.width},
        {"embed_dim", cfg.bench.embed_dim},
        {"k_values", cfg.bench.k_values},
        {"repetitions", cfg.bench.repetitions},
        {"min_rep_seconds", cfg.bench.min_rep_seconds}}}};
}

RunConfig RunConfigFromJson(const Json& j) {
  RunConfig cfg;
  ObjectReader r(j, "config");
  r.Get("seed", cfg.seed);
  if (const Json* c = r.Child("world")) cfg.world = WorldSettingsFromJson(*c);
  if (const Json* c = r.Child("data")) {
    ObjectReader d(*c, "data");
    d.Get("num_images", cfg.data.num_images);
    d.Get("first_index", cfg.data.first_index);
    d.Get("classes", cfg.data.classes);
    d.Get("templates", cfg.data.templates);
    d.Finish();
  }
  if (const Json* c = r.Child("model")) cfg.model = ModelFromJsonImpl(*c, false);
  if (const Json* c = r.Child("train")) {
    ObjectReader t(*c, "train");
    if (const Json* w = t.Child("weights")) cfg.train.weights = WeightsFromJson(*w);
    if (const Json* o = t.Child("optimizer"))
      cfg.train.optimizer = OptimizerFromJson(*o);
    t.Get("deep_supervision", cfg.train.deep_supervision);
    t.Finish();
  }
  if (const Json* c = r.Child("infer")) {
    ObjectReader in(*c, "infer");
    InferenceConfig& ic = cfg.infer.inference;
    in.Get("temperature", cfg.infer.classifier.temperature);
    in.Get("include_no_object", cfg.infer.classifier.include_no_object);
    GetEnum(in, "variant", ic.variant, ParseVariant);
    in.Get("gamma", ic.gamma);
    in.Get("lambda", ic.lambda);
    GetEnum(in, "subimage_mode", ic.subimage_mode, ParseSubimageMode);
    in.Get("subimage_resolution", ic.subimage_resolution);
    in.Get("fill", ic.fill);
    in.Get("threshold", ic.threshold);
    GetEnum(in, "mode", cfg.infer.mode, ParseSplitMode);
    in.Finish();
  }
  if (const Json* c = r.Child("eval")) {
    ObjectReader e(*c, "eval");
    GetEnum(e, "mode", cfg.eval.mode, ParseSplitMode);
    e.Get("theta", cfg.eval.theta);
    e.Finish();
  }
  if (const Json* c = r.Child("bench")) {
    ObjectReader b(*c, "bench");
    b.Get("num_queries", cfg.bench.num_queries);
    b.Get("height", cfg.bench.height);
    b.Get("width", cfg.bench.width);
    b.Get("embed_dim", cfg.bench.embed_dim);
    b.Get("k_values", cfg.bench.k_values);
    b.Get("repetitions", cfg.bench.repetitions);
    b.Get("min_rep_seconds", cfg.bench.min_rep_seconds);
    b.Finish();
  }
  r.Finish();
  cfg.model.seed = cfg.seed;
  cfg.bench.seed = cfg.seed;
  cfg.Validate();
  return cfg;
}

RunConfig LoadRunConfig(const std::string& path) {
  return RunConfigFromJson(ParseJson(ReadFile(path), path));
}

std::string Manifest::Resolve(const std::string& relative) const {
  return (std::filesystem::path(root) / relative).string();
}

void Manifest::Validate() const {
  std::set<std::string> names(vocabulary.begin(), vocabulary.end());
  ZS_CHECK(names.size() == vocabulary.size(), ErrorCode::kConfig,
           "manifest vocabulary has duplicate names");
  ZS_CHECK(static_cast<int>(vocabulary.size()) <= kMaxClasses,
           ErrorCode::kConfig, "vocabulary larger than a label map can hold");
  split.Validate();
  for (const auto& n : split.seen)
    ZS_CHECK(names.count(n), ErrorCode::kConfig,
             "split class '" + n + "' is not in the vocabulary");
  for (const auto& n : split.unseen)
    ZS_CHECK(names.count(n), ErrorCode::kConfig,
             "split class '" + n + "' is not in the vocabulary");
  for (const auto& s : samples) {
    ZS_CHECK(std::filesystem::exists(Resolve(s.image)), ErrorCode::kIo,
             "missing image " + Resolve(s.image));
    ZS_CHECK(std::filesystem::exists(Resolve(s.labels)), ErrorCode::kIo,
             "missing label map " + Resolve(s.labels));
  }
  if (!embeddings.empty())
    ZS_CHECK(std::filesystem::exists(Resolve(embeddings)), ErrorCode::kIo,
             "missing embeddings " + Resolve(embeddings));
}

Json ToJson(const Manifest& m) {
  Json samples = Json::array();
  for (const auto& s : m.samples)
    samples.push_back(Json{{"image", s.image}, {"labels", s.labels}});
  Json j{{"vocabulary", m.vocabulary},
         {"split", SplitToJson(m.split)},
         {"embeddings", m.embeddings},
         {"samples", samples}};
  if (m.has_world) {
    j["world_seed"] = m.world_seed;
    j["world"] = WorldSettingsToJson(m.world);
  }
  return j;
}

Manifest ManifestFromJson(const Json& j, const std::string& root) {
  Manifest m;
  m.root = root;
  ObjectReader r(j, "manifest");
  r.Get("vocabulary", m.vocabulary);
  if (const Json* s = r.Child("split")) m.split = SplitFromJson(*s);
  r.Get("embeddings", m.embeddings);
  if (const Json* s = r.Child("samples")) {
    ZS_CHECK(s->is_array(), ErrorCode::kConfig,
             "manifest.samples must be an array");
    for (const auto& e : *s) {
      ManifestEntry entry;
      ObjectReader er(e, "manifest.samples[]");
      er.Get("image", entry.image);
      er.Get("labels", entry.labels);
      er.Finish();
      m.samples.push_back(std::move(entry));
    }
  }
  if (const Json* w = r.Child("world")) {
    m.has_world = true;
    m.world = WorldSettingsFromJson(*w);
  }
  r.Get("world_seed", m.world_seed);
  r.Finish();
  return m;
}

Manifest LoadManifest(const std::string& path) {
  ZS_CHECK(std::filesystem::exists(path), ErrorCode::kIo,
           "manifest not found: " + path);
  const std::string root =
      std::filesystem::path(path).parent_path().string();
  Manifest m = ManifestFromJson(ParseJson(ReadFile(path), path),
                                root.empty() ? "." : root);
  m.Validate();
  return m;
}

Dataset LoadDataset(const Manifest& m) {
  Dataset d;
  d.vocabulary = m.vocabulary;
  const int k = static_cast<int>(m.vocabulary.size());
  for (const auto& entry : m.samples) {
    Sample s;
    s.image = ReadImage(m.Resolve(entry.image));
    const LabelMap labels = ReadLabelMap(m.Resolve(entry.labels));
    ZS_CHECK(labels.height == s.image.height && labels.width == s.image.width,
             ErrorCode::kDimension,
             entry.labels + ": label map size differs from its image");
    for (int v : labels.labels)
      ZS_CHECK(v == kIgnore || (v >= 0 && v < k), ErrorCode::kConfig,
               entry.labels + ": label " + std::to_string(v) +
                   " outside the vocabulary");
    s.truth = RegionsFromLabelMap(labels);
    d.samples.push_back(std::move(s));
  }
  return d;
}

}  // namespace zegseg
