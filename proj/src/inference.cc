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

#include "zegseg/inference.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zegseg/error.h"

namespace zegseg {

void ClassifierConfig::Validate() const {
  ZS_CHECK(temperature > 0.0 && std::isfinite(temperature), ErrorCode::kConfig,
           "temperature must be > 0");
}

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kSeg: return "seg";
    case Variant::kImg: return "img";
    case Variant::kFull: return "full";
  }
  return "?";
}

Variant ParseVariant(const std::string& name) {
  if (name == "seg") return Variant::kSeg;
  if (name == "img") return Variant::kImg;
  if (name == "full") return Variant::kFull;
  Fail(ErrorCode::kConfig, "unknown inference variant '" + name + "'");
}

const char* SubimageModeName(SubimageMode m) {
  switch (m) {
    case SubimageMode::kCrop: return "crop";
    case SubimageMode::kMask: return "mask";
    case SubimageMode::kCropAndMask: return "crop_and_mask";
  }
  return "?";
}

SubimageMode ParseSubimageMode(const std::string& name) {
  if (name == "crop") return SubimageMode::kCrop;
  if (name == "mask") return SubimageMode::kMask;
  if (name == "crop_and_mask") return SubimageMode::kCropAndMask;
  Fail(ErrorCode::kConfig, "unknown sub-image mode '" + name + "'");
}

void InferenceConfig::Validate() const {
  ZS_CHECK(gamma >= 0.0 && gamma <= 1.0, ErrorCode::kConfig,
           "gamma must be in [0,1]");
  ZS_CHECK(lambda >= 0.0 && lambda <= 1.0, ErrorCode::kConfig,
           "lambda must be in [0,1]");
  ZS_CHECK(subimage_resolution >= 8, ErrorCode::kConfig,
           "sub-image resolution must be >= 8");
  ZS_CHECK(threshold > 0.0 && threshold < 1.0, ErrorCode::kConfig,
           "threshold must be in (0,1)");
}

namespace {

void SoftmaxInPlace(std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double& x : logits) {
    x = std::exp(x - m);
    s += x;
  }
  for (double& x : logits) x /= s;
}

std::vector<double> CosineSoftmax(const std::vector<double>& query,
                                  const std::vector<const Embedding*>& keys,
                                  double temperature) {
  std::vector<double> logits;
  logits.reserve(keys.size());
  for (const Embedding* k : keys)
    logits.push_back(CosineSimilarity(k->values, query) / temperature);
  SoftmaxInPlace(logits);
  return logits;
}

}  // namespace

ScoreRows ClassifySegmentsText(
    const std::vector<std::vector<double>>& semantic_embeddings,
    const TextEmbeddingTable& table, const ClassifierConfig& cfg) {
  cfg.Validate();
  std::vector<const Embedding*> keys;
  if (cfg.include_no_object) {
    ZS_CHECK(table.no_object.dim() == table.dim(), ErrorCode::kDimension,
             "table has no usable no-object embedding");
    keys.push_back(&table.no_object);
  }
  for (const auto& e : table.embeddings) keys.push_back(&e);
  ZS_CHECK(!keys.empty(), ErrorCode::kConfig, "no classes to score");
  ScoreRows out;
  for (const auto& g : semantic_embeddings) {
    ZS_CHECK(static_cast<int>(g.size()) == table.dim(), ErrorCode::kDimension,
             "semantic embedding dim does not match the text table");
    out.push_back(CosineSoftmax(g, keys, cfg.temperature));
  }
  return out;
}

ScoreRows ClassColumns(const ScoreRows& scores, bool has_no_object) {
  if (!has_no_object) return scores;
  ScoreRows out;
  for (const auto& row : scores) out.emplace_back(row.begin() + 1, row.end());
  return out;
}

namespace {

Image ResizeNearest(const Image& src, int out_h, int out_w) {
  Image out(out_h, out_w, src.channels);
  for (int y = 0; y < out_h; ++y) {
    const int sy = std::min(src.height - 1,
                            static_cast<int>((y + 0.5) * src.height / out_h));
    for (int x = 0; x < out_w; ++x) {
      const int sx = std::min(src.width - 1,
                              static_cast<int>((x + 0.5) * src.width / out_w));
      for (int c = 0; c < src.channels; ++c) out.at(y, x, c) = src.at(sy, sx, c);
    }
  }
  return out;
}

std::vector<double> ChannelMeans(const Image& image) {
  std::vector<double> mean(image.channels, 0.0);
  for (size_t i = 0; i < image.num_pixels(); ++i)
    for (int c = 0; c < image.channels; ++c)
      mean[c] += image.data[i * image.channels + c];
  for (double& m : mean) m /= static_cast<double>(image.num_pixels());
  return mean;
}

}  // namespace

Image MakeSubimage(const Image& image, const SoftMask& mask, SubimageMode mode,
                   int resolution, const std::vector<double>& fill,
                   double threshold) {
  ZS_CHECK(mask.height == image.height && mask.width == image.width,
           ErrorCode::kDimension, "mask and image dimensions differ");
  ZS_CHECK(resolution >= 1, ErrorCode::kConfig, "resolution must be >= 1");
  const BinaryMask bin = Binarize(mask, threshold);
  std::vector<double> fill_value = fill.empty() ? ChannelMeans(image) : fill;
  ZS_CHECK(static_cast<int>(fill_value.size()) == image.channels,
           ErrorCode::kDimension, "fill value has the wrong channel count");

  Image work = image;
  if (mode != SubimageMode::kCrop) {
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x)
        if (!bin.at(y, x))
          for (int c = 0; c < image.channels; ++c)
            work.at(y, x, c) = fill_value[c];
  }
  if (mode == SubimageMode::kMask) return ResizeNearest(work, resolution, resolution);

  int y0 = image.height, y1 = -1, x0 = image.width, x1 = -1;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (!bin.at(y, x)) continue;
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
  }
  ZS_CHECK(y1 >= 0, ErrorCode::kEmptySegment,
           "binarised mask is empty; no sub-image to crop");
  Image crop(y1 - y0 + 1, x1 - x0 + 1, image.channels);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      for (int c = 0; c < image.channels; ++c)
        crop.at(y - y0, x - x0, c) = work.at(y, x, c);
  return ResizeNearest(crop, resolution, resolution);
}

ScoreRows ClassifySegmentsImage(const Image& image,
                                const std::vector<SoftMask>& masks,
                                const TextEmbeddingTable& table,
                                const ImageEmbeddingProvider& provider,
                                const ClassifierConfig& cfg,
                                const InferenceConfig& inf_cfg) {
  cfg.Validate();
  inf_cfg.Validate();
  std::vector<const Embedding*> keys;
  for (const auto& e : table.embeddings) keys.push_back(&e);
  ZS_CHECK(!keys.empty(), ErrorCode::kConfig, "no classes to score");
  const std::vector<double> uniform(keys.size(), 1.0 / keys.size());
  ScoreRows out;
  for (size_t q = 0; q < masks.size(); ++q) {
    Image sub;
    try {
      sub = MakeSubimage(image, masks[q], inf_cfg.subimage_mode,
                         inf_cfg.subimage_resolution, inf_cfg.fill,
                         inf_cfg.threshold);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptySegment) throw;
      out.push_back(uniform);
      continue;
    }
    Embedding a;
    try {
      a = provider.Embed(sub);
    } catch (const Error& e) {
      Fail(e.code(), "image embedding provider failed for query " +
                         std::to_string(q) + ": " + e.what());
    }
    out.push_back(CosineSoftmax(a.values, keys, cfg.temperature));
  }
  return out;
}

ScoreRows FuseScores(const ScoreRows& text_scores,
                     const ScoreRows& image_scores, const SplitIndex& split,
                     double lambda) {
  ZS_CHECK(lambda >= 0.0 && lambda <= 1.0, ErrorCode::kConfig,
           "lambda must be in [0,1]");
  ZS_CHECK(text_scores.size() == image_scores.size(), ErrorCode::kDimension,
           "text and image scores disagree on query count");
  ScoreRows out;
  for (size_t q = 0; q < text_scores.size(); ++q) {
    const auto& p = text_scores[q];
    const auto& pi = image_scores[q];
    ZS_CHECK(static_cast<int>(p.size()) == split.num_classes &&
                 static_cast<int>(pi.size()) == split.num_classes,
             ErrorCode::kDimension, "score rows do not cover the class set");
    double avg = 0.0;
    for (int c : split.seen) avg += pi[c];
    if (!split.seen.empty()) avg /= static_cast<double>(split.seen.size());
    std::vector<double> fused(p.size(), 0.0);
    for (size_t c = 0; c < p.size(); ++c) {
      if (split.is_seen[c]) {
        fused[c] = std::pow(p[c], lambda) * std::pow(avg, 1.0 - lambda);
      } else if (split.is_unseen[c]) {
        fused[c] = std::pow(p[c], 1.0 - lambda) * std::pow(pi[c], lambda);
      }
    }
    out.push_back(std::move(fused));
  }
  return out;
}

namespace {

std::vector<int> Candidates(const SplitIndex& split) {
  std::vector<int> cands;
  for (int c = 0; c < split.num_classes; ++c) {
    if (split.mode == SplitMode::kZs3 ? split.is_unseen[c]
                                      : (split.is_seen[c] || split.is_unseen[c]))
      cands.push_back(c);
  }
  ZS_CHECK(!cands.empty(), ErrorCode::kConfig, "no classes to score");
  return cands;
}

}  // namespace

LabelMap SemanticMap(const ScoreRows& class_scores,
                     const std::vector<SoftMask>& masks,
                     const SplitIndex& split, double gamma) {
  ZS_CHECK(class_scores.size() == masks.size(), ErrorCode::kDimension,
           "score and mask counts differ");
  ZS_CHECK(!masks.empty(), ErrorCode::kConfig, "no segments to aggregate");
  const std::vector<int> cands = Candidates(split);
  const bool calibrate = split.mode == SplitMode::kGzs3;
  const int h = masks[0].height;
  const int w = masks[0].width;
  LabelMap out(h, w, kIgnore);
  std::vector<double> agg(split.num_classes);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(agg.begin(), agg.end(), 0.0);
      for (size_t q = 0; q < masks.size(); ++q) {
        const double m = masks[q].at(y, x);
        const auto& row = class_scores[q];
        for (int c : cands) agg[c] += row[c] * m;
      }
      int best = -1;
      double best_v = -std::numeric_limits<double>::infinity();
      for (int c : cands) {
        const double v = agg[c] - (calibrate && split.is_seen[c] ? gamma : 0.0);
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      out.at(y, x) = best;
    }
  }
  return out;
}

LabelMap PixelProbabilityMap(const ad::Matrix& probs, int height, int width,
                             const SplitIndex& split, double gamma) {
  ZS_CHECK(probs.rows == height * width && probs.cols == split.num_classes,
           ErrorCode::kDimension, "probability map shape mismatch");
  const std::vector<int> cands = Candidates(split);
  const bool calibrate = split.mode == SplitMode::kGzs3;
  LabelMap out(height, width, kIgnore);
  for (int i = 0; i < probs.rows; ++i) {
    int best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int c : cands) {
      const double v =
          probs(i, c) - (calibrate && split.is_seen[c] ? gamma : 0.0);
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    out.labels[i] = best;
  }
  return out;
}

InferenceResult RunInference(const Segmenter& model, const Image& image,
                             const TextEmbeddingTable& table,
                             const SplitIndex& split,
                             const ImageEmbeddingProvider* image_provider,
                             const ClassifierConfig& cls_cfg,
                             const InferenceConfig& inf_cfg) {
  inf_cfg.Validate();
  ZS_CHECK(table.size() == split.num_classes, ErrorCode::kConfig,
           "text table must cover the whole vocabulary");
  InferenceResult result;
  std::vector<SegmentPrediction> preds = model.Predict(image);
  std::vector<std::vector<double>> semantic;
  for (auto& p : preds) {
    semantic.push_back(p.semantic_embedding);
    result.masks.push_back(std::move(p.soft_mask));
  }
  TextEmbeddingTable scoring = table;
  if (cls_cfg.include_no_object) scoring.no_object = model.NoObjectEmbedding();
  result.text_scores = ClassifySegmentsText(semantic, scoring, cls_cfg);
  const ScoreRows text_classes =
      ClassColumns(result.text_scores, cls_cfg.include_no_object);

  const ScoreRows* chosen = &text_classes;
  if (inf_cfg.variant != Variant::kSeg) {
    ZS_CHECK(image_provider != nullptr, ErrorCode::kConfig,
             "image embedding provider required for this variant");
    ClassifierConfig img_cfg = cls_cfg;
    img_cfg.include_no_object = false;
    result.image_scores = ClassifySegmentsImage(
        image, result.masks, table, *image_provider, img_cfg, inf_cfg);
    if (inf_cfg.variant == Variant::kImg) {
      chosen = &result.image_scores;
    } else {
      result.fused_scores = FuseScores(text_classes, result.image_scores,
                                       split, inf_cfg.lambda);
      chosen = &result.fused_scores;
    }
  }
  result.labels = SemanticMap(*chosen, result.masks, split, inf_cfg.gamma);
  return result;
}

LabelMap RunPixelBaseline(const Segmenter& model, const Image& image,
                          const TextEmbeddingTable& table,
                          const SplitIndex& split, double temperature,
                          double gamma) {
  ZS_CHECK(table.size() == split.num_classes, ErrorCode::kConfig,
           "text table must cover the whole vocabulary");
  ad::Matrix probs =
      PixelZeroShotProbabilities(model, image, table, temperature);
  return PixelProbabilityMap(probs, image.height, image.width, split, gamma);
}

}  // namespace zegseg
