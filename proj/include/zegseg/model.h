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

#ifndef ZEGSEG_MODEL_H_
#define ZEGSEG_MODEL_H_

// The segmenter: a small convolutional pixel encoder, a transformer decoder
// turning N learned queries into segment embeddings, and the mask and
// semantic projection heads. The pixel-level zero-shot baseline shares the
// encoder and swaps the decoder for a per-pixel projection.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zegseg/autodiff.h"
#include "zegseg/embedding.h"
#include "zegseg/types.h"

namespace zegseg {

enum class ModelKind { kSegment, kPixelBaseline };

const char* ModelKindName(ModelKind kind);
ModelKind ParseModelKind(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::kSegment;
  int num_queries = 8;
  int decoder_dim = 32;
  int decoder_layers = 2;
  int num_heads = 4;
  int pixel_feature_dim = 32;
  int feature_stride = 4;
  int semantic_dim = 16;
  int encoder_channels = 16;
  int ffn_dim = 64;
  int mask_hidden_dim = 32;
  int image_channels = 3;
  // Softmax temperature of the cosine classifier the model is trained with.
  double temperature = 0.01;
  uint64_t seed = 0;

  // Full-scale sizes (100 queries, width 256, 512-d embeddings, 6 layers).
  static ModelConfig FullScale();

  void Validate() const;
};

// Named parameter tensors in a fixed order.
struct ParameterStore {
  std::vector<std::string> names;
  std::vector<ad::Matrix> tensors;

  int IndexOf(const std::string& name) const;  // -1 if absent
  const ad::Matrix& Get(const std::string& name) const;
  ad::Matrix& Get(const std::string& name);
  void Add(const std::string& name, ad::Matrix tensor);
  size_t NumScalars() const;
};

// Parameters resolved to graph nodes for one forward pass.
class BoundParameters {
 public:
  // Leaves (differentiable) when `trainable`, else constants.
  BoundParameters(ad::Graph& graph, const ParameterStore& store,
                  bool trainable);
  ad::Var operator[](const std::string& name) const;
  const std::vector<ad::Var>& vars() const { return vars_; }
  ad::Graph& graph() const { return *graph_; }

 private:
  ad::Graph* graph_;
  const ParameterStore* store_;
  std::vector<ad::Var> vars_;
};

struct PixelFeatureMap {
  int dim = 0;
  int height = 0;
  int width = 0;
  ad::Matrix features;  // (height*width) x dim

  const double* at(int h, int w) const { return features.row(h * width + w); }
};

struct SegmentPrediction {
  std::vector<double> mask_embedding;
  std::vector<double> semantic_embedding;
  SoftMask soft_mask;
};

// Per-decoder-layer heads when deep supervision is on; the last entry is the
// model output.
struct DecoderHeads {
  ad::Var mask_embeddings;      // N x pixel_feature_dim
  ad::Var semantic_embeddings;  // N x semantic_dim
};

class Segmenter {
 public:
  Segmenter() = default;
  // Deterministic initialisation from config.seed. Values are rounded to
  // float32 so checkpoints reproduce them exactly.
  explicit Segmenter(const ModelConfig& config);
  Segmenter(const ModelConfig& config, ParameterStore params);

  const ModelConfig& config() const { return config_; }
  const ParameterStore& params() const { return params_; }
  ParameterStore& mutable_params() { return params_; }

  // Graph-level building blocks used by training and the plain API.
  ad::Var EncodeGraph(const BoundParameters& p, const Image& image) const;
  std::vector<DecoderHeads> DecodeGraph(const BoundParameters& p,
                                        ad::Var memory, ad::Var pos,
                                        bool all_layers) const;
  // N x (fh*fw) mask logits at feature resolution.
  ad::Var MaskLogitsGraph(ad::Var mask_embeddings, ad::Var features) const;
  // (fh*fw) x semantic_dim projected pixel embeddings (baseline only).
  ad::Var PixelProjectionGraph(const BoundParameters& p,
                               ad::Var features) const;

  // Plain API.
  PixelFeatureMap EncodePixels(const Image& image) const;
  std::vector<SegmentPrediction> Predict(const Image& image) const;
  // (B_q, G_q) for every query without the masks.
  std::vector<std::pair<std::vector<double>, std::vector<double>>>
  DecodeSegments(const PixelFeatureMap& features) const;

  // Learnable no-object embedding T_0 (segment model only).
  Embedding NoObjectEmbedding() const;

 private:
  ModelConfig config_;
  ParameterStore params_;
};

// Fixed sinusoidal encoding of a (height x width) grid, (height*width) x dim.
ad::Matrix SinePositionalEncoding(int height, int width, int dim);

// m_q[h,w] = sigmoid(B_q . F[h,w]), nearest-neighbour upsampled by `stride`.
std::vector<SoftMask> PredictMasks(
    const std::vector<std::vector<double>>& mask_embeddings,
    const PixelFeatureMap& features, int stride);

// Per-pixel class probabilities of the pixel-level baseline: the cosine
// softmax of each projected pixel embedding against every class (no
// no-object entry). Result is (H*W) x |classes| at image resolution.
ad::Matrix PixelZeroShotProbabilities(const Segmenter& model,
                                      const Image& image,
                                      const TextEmbeddingTable& table,
                                      double temperature);

// Same computation from an already projected pixel-embedding matrix at
// feature resolution, (fh*fw) x |classes|.
ad::Matrix PixelZeroShotFromEmbeddings(const ad::Matrix& pixel_embeddings,
                                       const TextEmbeddingTable& table,
                                       double temperature);

ParameterStore InitParameters(const ModelConfig& config);

}  // namespace zegseg

#endif  // ZEGSEG_MODEL_H_
