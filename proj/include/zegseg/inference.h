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

#ifndef ZEGSEG_INFERENCE_H_
#define ZEGSEG_INFERENCE_H_

// Zero-shot inference: cosine classification of segment embeddings against
// class text embeddings, image-embedding classification of per-segment
// sub-images, geometric score fusion, and the calibrated per-pixel argmax.

#include <string>
#include <vector>

#include "zegseg/embedding.h"
#include "zegseg/model.h"
#include "zegseg/types.h"

namespace zegseg {

struct ClassifierConfig {
  double temperature = 0.01;
  bool include_no_object = true;

  void Validate() const;
};

enum class Variant { kSeg, kImg, kFull };
enum class SubimageMode { kCrop, kMask, kCropAndMask };

const char* VariantName(Variant v);
Variant ParseVariant(const std::string& name);
const char* SubimageModeName(SubimageMode m);
SubimageMode ParseSubimageMode(const std::string& name);

struct InferenceConfig {
  Variant variant = Variant::kSeg;
  double gamma = 0.0;
  double lambda = 0.5;
  SubimageMode subimage_mode = SubimageMode::kCropAndMask;
  int subimage_resolution = 224;
  // Per-channel fill for masked-out pixels; empty means the image's own
  // per-channel mean.
  std::vector<double> fill;
  double threshold = kDefaultThreshold;

  void Validate() const;
};

// Per-query probability rows. For text scores, column 0 is no-object when
// it is included and class c sits at column c+1; otherwise class c is at c.
using ScoreRows = std::vector<std::vector<double>>;

// p_q(c) = softmax_c(cos(T_c, G_q) / temperature).
ScoreRows ClassifySegmentsText(
    const std::vector<std::vector<double>>& semantic_embeddings,
    const TextEmbeddingTable& table, const ClassifierConfig& cfg);

// Class columns only (drops the no-object column when present).
ScoreRows ClassColumns(const ScoreRows& scores, bool has_no_object);

Image MakeSubimage(const Image& image, const SoftMask& mask, SubimageMode mode,
                   int resolution, const std::vector<double>& fill = {},
                   double threshold = kDefaultThreshold);

// p'_q over classes only. Queries whose sub-image cannot be formed get a
// uniform row.
ScoreRows ClassifySegmentsImage(const Image& image,
                                const std::vector<SoftMask>& masks,
                                const TextEmbeddingTable& table,
                                const ImageEmbeddingProvider& provider,
                                const ClassifierConfig& cfg,
                                const InferenceConfig& inf_cfg);

// Geometric fusion. Both inputs are class-only rows in table order.
//   seen c:   p(c)^lambda * avg_seen(p')^(1-lambda)
//   unseen c: p(c)^(1-lambda) * p'(c)^lambda
ScoreRows FuseScores(const ScoreRows& text_scores,
                     const ScoreRows& image_scores, const SplitIndex& split,
                     double lambda);

// label = argmax_c sum_q score_q(c) m_q[h,w] - gamma [c seen]. In ZS3 mode
// only unseen classes compete and gamma is ignored. Ties go to the lowest
// class index.
LabelMap SemanticMap(const ScoreRows& class_scores,
                     const std::vector<SoftMask>& masks,
                     const SplitIndex& split, double gamma);

// Per-pixel calibrated argmax for the pixel-level baseline, probs is
// (H*W) x |classes|.
LabelMap PixelProbabilityMap(const ad::Matrix& probs, int height, int width,
                             const SplitIndex& split, double gamma);

struct InferenceResult {
  LabelMap labels;
  ScoreRows text_scores;   // with no-object column when configured
  ScoreRows image_scores;  // empty for the seg variant
  ScoreRows fused_scores;  // empty unless full variant
  std::vector<SoftMask> masks;
};

// Full pipeline for one image. `table` must list every vocabulary class in
// vocabulary order; `image_provider` may be null for the seg variant and
// is never called by it.
InferenceResult RunInference(const Segmenter& model, const Image& image,
                             const TextEmbeddingTable& table,
                             const SplitIndex& split,
                             const ImageEmbeddingProvider* image_provider,
                             const ClassifierConfig& cls_cfg,
                             const InferenceConfig& inf_cfg);

// Pixel baseline counterpart of RunInference.
LabelMap RunPixelBaseline(const Segmenter& model, const Image& image,
                          const TextEmbeddingTable& table,
                          const SplitIndex& split, double temperature,
                          double gamma);

}  // namespace zegseg

#endif  // ZEGSEG_INFERENCE_H_
