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

#include "zegseg/c_api.h"

#include <cstring>
#include <string>

#include "zegseg/commands.h"
#include "zegseg/config.h"
#include "zegseg/error.h"
#include "zegseg/io.h"
#include "zegseg/model.h"

struct zs_config {
  zegseg::RunConfig cfg;
};

struct zs_model {
  zegseg::Segmenter model;
};

namespace {

thread_local std::string last_error;

template <typename F>
int Guard(F&& f) {
  try {
    f();
    last_error.clear();
    return ZS_OK;
  } catch (const zegseg::Error& e) {
    last_error = std::string(zegseg::ErrorCodeName(e.code())) + ": " + e.what();
    return zegseg::ExitCodeFor(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return ZS_ERR_NUMERIC;
  } catch (const std::exception& e) {
    last_error = std::string("internal: ") + e.what();
    return ZS_ERR_CONFIG;
  }
}

void Give(char** out, const std::string& s) {
  if (!out) return;
  char* p = new char[s.size() + 1];
  std::memcpy(p, s.c_str(), s.size() + 1);
  *out = p;
}

std::string Str(const char* s) { return s ? s : ""; }

void Need(const void* p, const char* what) {
  ZS_CHECK(p != nullptr, zegseg::ErrorCode::kConfig,
           std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* zs_version(void) { return "0.1.0"; }

const char* zs_last_error(void) { return last_error.c_str(); }

void zs_string_free(char* s) { delete[] s; }

int zs_config_create(const char* json, zs_config** out) {
  return Guard([&] {
    Need(out, "out");
    zegseg::RunConfig cfg =
        json ? zegseg::RunConfigFromJson(zegseg::ParseJson(json, "config"))
             : zegseg::RunConfig{};
    *out = new zs_config{std::move(cfg)};
  });
}

int zs_config_load(const char* path, zs_config** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    *out = new zs_config{zegseg::LoadRunConfig(path)};
  });
}

int zs_config_set(zs_config* cfg, const char* key, const char* json_value) {
  return Guard([&] {
    Need(cfg, "config");
    Need(key, "key");
    Need(json_value, "value");
    zegseg::Json j = zegseg::ToJson(cfg->cfg);
    zegseg::Json* node = &j;
    std::string k = key;
    size_t start = 0;
    while (true) {
      const size_t dot = k.find('.', start);
      const std::string part = k.substr(start, dot - start);
      ZS_CHECK(node->is_object() && node->contains(part),
               zegseg::ErrorCode::kConfig, "unknown config key '" + k + "'");
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    zegseg::Json value = zegseg::ParseJson(json_value, key);
    *node = std::move(value);
    cfg->cfg = zegseg::RunConfigFromJson(j);
  });
}

int zs_config_to_json(const zs_config* cfg, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Give(out, zegseg::DumpJson(zegseg::ToJson(cfg->cfg)));
  });
}

void zs_config_free(zs_config* cfg) { delete cfg; }

int zs_gen_data(const zs_config* cfg, const char* out_dir, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Need(out_dir, "out_dir");
    const zegseg::Manifest m = zegseg::GenerateData(cfg->cfg, out_dir);
    Give(out, zegseg::DumpJson(zegseg::Json{
                  {"manifest", m.Resolve("manifest.json")},
                  {"images", m.samples.size()}}));
  });
}

int zs_train(const zs_config* cfg, const char* manifest, const char* checkpoint,
             const char* loss_csv, const char* embeddings, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Need(manifest, "manifest");
    Need(checkpoint, "checkpoint");
    const std::string csv =
        loss_csv ? std::string(loss_csv) : std::string(checkpoint) + ".loss.csv";
    Give(out, zegseg::DumpJson(zegseg::TrainCommand(
                  cfg->cfg, manifest, checkpoint, csv, Str(embeddings))));
  });
}

int zs_infer(const zs_config* cfg, const char* checkpoint, const char* input,
             const char* out_dir, const char* embeddings, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Need(checkpoint, "checkpoint");
    Need(input, "input");
    Need(out_dir, "out_dir");
    Give(out, zegseg::DumpJson(zegseg::InferCommand(
                  cfg->cfg, checkpoint, input, out_dir, Str(embeddings))));
  });
}

int zs_eval(const zs_config* cfg, const char* pred_dir, const char* manifest,
            const char* report, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Need(pred_dir, "pred_dir");
    Need(manifest, "manifest");
    Give(out, zegseg::DumpJson(zegseg::EvalCommand(cfg->cfg, pred_dir,
                                                   manifest, Str(report))));
  });
}

int zs_eval_boundary(const zs_config* cfg, const char* pred_dir,
                     const char* manifest, const char* report, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Need(pred_dir, "pred_dir");
    Need(manifest, "manifest");
    Give(out, zegseg::DumpJson(zegseg::EvalBoundaryCommand(
                  cfg->cfg, pred_dir, manifest, Str(report))));
  });
}

int zs_bench_head(const zs_config* cfg, const char* csv_path, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Give(out, zegseg::BenchHeadCommand(cfg->cfg, Str(csv_path)));
  });
}

int zs_model_load(const char* path, zs_model** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    *out = new zs_model{zegseg::ReadCheckpoint(path)};
  });
}

int zs_model_save(const zs_model* model, const char* path) {
  return Guard([&] {
    Need(model, "model");
    Need(path, "path");
    zegseg::WriteCheckpoint(path, model->model);
  });
}

void zs_model_free(zs_model* model) { delete model; }

int zs_model_num_queries(const zs_model* model) {
  return model ? model->model.config().num_queries : 0;
}

int zs_model_semantic_dim(const zs_model* model) {
  return model ? model->model.config().semantic_dim : 0;
}

int zs_model_predict(const zs_model* model, int height, int width,
                     int channels, const double* pixels, double* masks,
                     double* semantic) {
  return Guard([&] {
    Need(model, "model");
    Need(pixels, "pixels");
    ZS_CHECK(model->model.config().kind == zegseg::ModelKind::kSegment,
             zegseg::ErrorCode::kConfig,
             "predict needs a segment model checkpoint");
    zegseg::Image image(height, width, channels);
    std::memcpy(image.data.data(), pixels, image.data.size() * sizeof(double));
    image.Validate();
    const auto preds = model->model.Predict(image);
    const size_t hw = static_cast<size_t>(height) * width;
    for (size_t q = 0; q < preds.size(); ++q) {
      if (masks)
        std::memcpy(masks + q * hw, preds[q].soft_mask.values.data(),
                    hw * sizeof(double));
      if (semantic) {
        const auto& g = preds[q].semantic_embedding;
        std::memcpy(semantic + q * g.size(), g.data(), g.size() * sizeof(double));
      }
    }
  });
}

}  // extern "C"
