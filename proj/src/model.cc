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

#include "zegseg/model.h"

#include <cmath>
#include <random>

#include "zegseg/error.h"
#include "zegseg/rng.h"

namespace zegseg {

using ad::Matrix;
using ad::Var;

const char* ModelKindName(ModelKind kind) {
  return kind == ModelKind::kSegment ? "segment" : "pixel_baseline";
}

ModelKind ParseModelKind(const std::string& name) {
  if (name == "segment") return ModelKind::kSegment;
  if (name == "pixel_baseline") return ModelKind::kPixelBaseline;
  Fail(ErrorCode::kConfig, "unknown model kind '" + name + "'");
}

ModelConfig ModelConfig::FullScale() {
  ModelConfig c;
  c.num_queries = 100;
  c.decoder_dim = 256;
  c.decoder_layers = 6;
  c.num_heads = 8;
  c.pixel_feature_dim = 256;
  c.semantic_dim = 512;
  c.encoder_channels = 64;
  c.ffn_dim = 2048;
  c.mask_hidden_dim = 256;
  return c;
}

void ModelConfig::Validate() const {
  ZS_CHECK(num_queries >= 1, ErrorCode::kConfig, "num_queries must be >= 1");
  ZS_CHECK(decoder_dim >= 4 && decoder_dim % 4 == 0, ErrorCode::kConfig,
           "decoder_dim must be a positive multiple of 4");
  ZS_CHECK(num_heads >= 1 && decoder_dim % num_heads == 0, ErrorCode::kConfig,
           "decoder_dim must be divisible by num_heads");
  ZS_CHECK(decoder_layers >= 0, ErrorCode::kConfig,
           "decoder_layers must be >= 0");
  ZS_CHECK(feature_stride == 1 || feature_stride == 2 || feature_stride == 4,
           ErrorCode::kConfig, "feature_stride must be 1, 2 or 4");
  ZS_CHECK(pixel_feature_dim >= 1 && semantic_dim >= 1 &&
               encoder_channels >= 1 && ffn_dim >= 1 && mask_hidden_dim >= 1,
           ErrorCode::kConfig, "layer widths must be positive");
  ZS_CHECK(image_channels == 1 || image_channels == 3, ErrorCode::kConfig,
           "image_channels must be 1 or 3");
  ZS_CHECK(temperature > 0.0, ErrorCode::kConfig, "temperature must be > 0");
}

int ParameterStore::IndexOf(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

const Matrix& ParameterStore::Get(const std::string& name) const {
  int i = IndexOf(name);
  ZS_CHECK(i >= 0, ErrorCode::kInvariant, "missing parameter " + name);
  return tensors[i];
}

Matrix& ParameterStore::Get(const std::string& name) {
  int i = IndexOf(name);
  ZS_CHECK(i >= 0, ErrorCode::kInvariant, "missing parameter " + name);
  return tensors[i];
}

void ParameterStore::Add(const std::string& name, Matrix tensor) {
  ZS_CHECK(IndexOf(name) < 0, ErrorCode::kInvariant,
           "duplicate parameter " + name);
  names.push_back(name);
  tensors.push_back(std::move(tensor));
}

size_t ParameterStore::NumScalars() const {
  size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

BoundParameters::BoundParameters(ad::Graph& graph, const ParameterStore& store,
                                 bool trainable)
    : graph_(&graph), store_(&store) {
  vars_.reserve(store.tensors.size());
  for (const auto& t : store.tensors) {
    vars_.push_back(trainable ? graph.Leaf(t) : graph.Constant(t));
  }
}

Var BoundParameters::operator[](const std::string& name) const {
  int i = store_->IndexOf(name);
  ZS_CHECK(i >= 0, ErrorCode::kInvariant, "missing parameter " + name);
  return vars_[i];
}

namespace {

std::vector<int> EncoderStrides(int feature_stride) {
  switch (feature_stride) {
    case 4: return {2, 2, 1};
    case 2: return {2, 1, 1};
    default: return {1, 1, 1};
  }
}

class Initializer {
 public:
  explicit Initializer(uint64_t seed) : rng_(MakeRng(seed, {HashString("init")})) {}

  Matrix Normal(int rows, int cols, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.v) v = static_cast<float>(dist(rng_));
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

void AddLinear(ParameterStore& store, Initializer& init, const std::string& name,
               int in, int out) {
  store.Add(name + ".w", init.Normal(in, out, 1.0 / std::sqrt(in)));
  store.Add(name + ".b", Matrix(1, out, 0.0));
}

void AddLayerNorm(ParameterStore& store, const std::string& name, int dim) {
  store.Add(name + ".g", Matrix(1, dim, 1.0));
  store.Add(name + ".b", Matrix(1, dim, 0.0));
}

Var Linear(const BoundParameters& p, const std::string& name, Var x) {
  return ad::AddRow(ad::MatMul(x, p[name + ".w"]), p[name + ".b"]);
}

Var Norm(const BoundParameters& p, const std::string& name, Var x) {
  return ad::LayerNorm(x, p[name + ".g"], p[name + ".b"]);
}

Var Attention(const BoundParameters& p, const std::string& name, Var q_in,
              Var k_in, Var v_in, int heads) {
  Var q = Linear(p, name + ".q", q_in);
  Var k = Linear(p, name + ".k", k_in);
  Var v = Linear(p, name + ".v", v_in);
  const int d = q.cols();
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : ad::ColSlice(q, h * dh, (h + 1) * dh);
    Var kh = heads == 1 ? k : ad::ColSlice(k, h * dh, (h + 1) * dh);
    Var vh = heads == 1 ? v : ad::ColSlice(v, h * dh, (h + 1) * dh);
    Var attn = ad::SoftmaxRows(ad::Scale(ad::MatMulNT(qh, kh), scale));
    outs.push_back(ad::MatMul(attn, vh));
  }
  Var merged = heads == 1 ? outs[0] : ad::ConcatCols(outs);
  return Linear(p, name + ".o", merged);
}

Matrix ImageMatrix(const Image& image) {
  Matrix m(static_cast<int>(image.num_pixels()), image.channels);
  m.v = image.data;
  return m;
}

}  // namespace

ParameterStore InitParameters(const ModelConfig& config) {
  config.Validate();
  Initializer init(config.seed);
  ParameterStore store;
  const int c0 = config.image_channels;
  const int c1 = config.encoder_channels;
  const int c2 = 2 * config.encoder_channels;
  const int pf = config.pixel_feature_dim;
  store.Add("enc.conv1.w", init.Normal(c1, 9 * c0, 1.0 / std::sqrt(9.0 * c0)));
  store.Add("enc.conv1.b", Matrix(1, c1, 0.0));
  store.Add("enc.conv2.w", init.Normal(c2, 9 * c1, 1.0 / std::sqrt(9.0 * c1)));
  store.Add("enc.conv2.b", Matrix(1, c2, 0.0));
  store.Add("enc.conv3.w", init.Normal(pf, 9 * c2, 1.0 / std::sqrt(9.0 * c2)));
  store.Add("enc.conv3.b", Matrix(1, pf, 0.0));

  if (config.kind == ModelKind::kPixelBaseline) {
    AddLinear(store, init, "pix_proj", pf, config.semantic_dim);
    return store;
  }

  const int d = config.decoder_dim;
  AddLinear(store, init, "dec.input_proj", pf, d);
  store.Add("dec.query_embed", init.Normal(config.num_queries, d, 1.0));
  for (int l = 0; l < config.decoder_layers; ++l) {
    const std::string pre = "dec.layer" + std::to_string(l);
    for (const char* attn : {".cross", ".self"}) {
      for (const char* proj : {".q", ".k", ".v", ".o"}) {
        AddLinear(store, init, pre + attn + proj, d, d);
      }
    }
    AddLayerNorm(store, pre + ".norm1", d);
    AddLayerNorm(store, pre + ".norm2", d);
    AddLinear(store, init, pre + ".ffn1", d, config.ffn_dim);
    AddLinear(store, init, pre + ".ffn2", config.ffn_dim, d);
    AddLayerNorm(store, pre + ".norm3", d);
  }
  AddLayerNorm(store, "dec.final_norm", d);
  AddLinear(store, init, "mask_proj.fc1", d, config.mask_hidden_dim);
  AddLinear(store, init, "mask_proj.fc2", config.mask_hidden_dim,
            config.mask_hidden_dim);
  AddLinear(store, init, "mask_proj.fc3", config.mask_hidden_dim, pf);
  AddLinear(store, init, "sem_proj", d, config.semantic_dim);

  Embedding t0 = InitNoObjectEmbedding(config.semantic_dim, config.seed);
  Matrix no_object(1, config.semantic_dim);
  for (int i = 0; i < config.semantic_dim; ++i)
    no_object.v[i] = static_cast<float>(t0.values[i]);
  store.Add("no_object", std::move(no_object));
  return store;
}

Segmenter::Segmenter(const ModelConfig& config)
    : config_(config), params_(InitParameters(config)) {}

Segmenter::Segmenter(const ModelConfig& config, ParameterStore params)
    : config_(config), params_(std::move(params)) {
  config_.Validate();
  ParameterStore reference = InitParameters(config_);
  ZS_CHECK(reference.names == params_.names, ErrorCode::kInvariant,
           "parameter names do not match the model config");
  for (size_t i = 0; i < reference.tensors.size(); ++i) {
    ZS_CHECK(reference.tensors[i].rows == params_.tensors[i].rows &&
                 reference.tensors[i].cols == params_.tensors[i].cols,
             ErrorCode::kInvariant,
             "parameter " + params_.names[i] + " has the wrong shape");
  }
}

Var Segmenter::EncodeGraph(const BoundParameters& p, const Image& image) const {
  const int s = config_.feature_stride;
  ZS_CHECK(image.channels == config_.image_channels, ErrorCode::kDimension,
           "image channel count does not match the model");
  ZS_CHECK(image.height % s == 0 && image.width % s == 0,
           ErrorCode::kDimension,
           "image dimensions must be divisible by the feature stride");
  const std::vector<int> strides = EncoderStrides(s);
  ad::Graph& g = p.graph();
  Var x = g.Constant(ImageMatrix(image));
  int h = image.height;
  int w = image.width;
  x = ad::Gelu(ad::Conv3x3(x, h, w, p["enc.conv1.w"], p["enc.conv1.b"],
                           strides[0]));
  h /= strides[0];
  w /= strides[0];
  x = ad::Gelu(ad::Conv3x3(x, h, w, p["enc.conv2.w"], p["enc.conv2.b"],
                           strides[1]));
  h /= strides[1];
  w /= strides[1];
  return ad::Conv3x3(x, h, w, p["enc.conv3.w"], p["enc.conv3.b"], strides[2]);
}

std::vector<DecoderHeads> Segmenter::DecodeGraph(const BoundParameters& p,
                                                 Var memory, Var pos,
                                                 bool all_layers) const {
  ZS_CHECK(config_.kind == ModelKind::kSegment, ErrorCode::kConfig,
           "the pixel baseline has no segment decoder");
  ad::Graph& g = p.graph();
  const int d = config_.decoder_dim;
  const int heads = config_.num_heads;
  Var mem = Linear(p, "dec.input_proj", memory);
  ZS_CHECK(pos.cols() == d && pos.rows() == mem.rows(), ErrorCode::kDimension,
           "positional encoding shape mismatch");
  Var mem_pos = ad::Add(mem, pos);
  Var qpos = p["dec.query_embed"];
  Var tgt = g.Constant(Matrix(config_.num_queries, d, 0.0));

  auto heads_for = [&](Var x) {
    Var y = Norm(p, "dec.final_norm", x);
    Var hidden = ad::Gelu(Linear(p, "mask_proj.fc1", y));
    hidden = ad::Gelu(Linear(p, "mask_proj.fc2", hidden));
    return DecoderHeads{Linear(p, "mask_proj.fc3", hidden),
                        Linear(p, "sem_proj", y)};
  };

  std::vector<DecoderHeads> out;
  for (int l = 0; l < config_.decoder_layers; ++l) {
    const std::string pre = "dec.layer" + std::to_string(l);
    Var q = ad::Add(tgt, qpos);
    tgt = Norm(p, pre + ".norm1",
               ad::Add(tgt, Attention(p, pre + ".cross", q, mem_pos, mem,
                                      heads)));
    q = ad::Add(tgt, qpos);
    tgt = Norm(p, pre + ".norm2",
               ad::Add(tgt, Attention(p, pre + ".self", q, q, tgt, heads)));
    Var ffn = Linear(p, pre + ".ffn2",
                     ad::Gelu(Linear(p, pre + ".ffn1", tgt)));
    tgt = Norm(p, pre + ".norm3", ad::Add(tgt, ffn));
    if (all_layers && l + 1 < config_.decoder_layers)
      out.push_back(heads_for(tgt));
  }
  out.push_back(heads_for(tgt));
  return out;
}

Var Segmenter::MaskLogitsGraph(Var mask_embeddings, Var features) const {
  ZS_CHECK(mask_embeddings.cols() == features.cols(), ErrorCode::kDimension,
           "mask embedding and feature dimensions differ");
  return ad::MatMulNT(mask_embeddings, features);
}

Var Segmenter::PixelProjectionGraph(const BoundParameters& p,
                                    Var features) const {
  ZS_CHECK(config_.kind == ModelKind::kPixelBaseline, ErrorCode::kConfig,
           "pixel projection exists only in the pixel baseline");
  return Linear(p, "pix_proj", features);
}

PixelFeatureMap Segmenter::EncodePixels(const Image& image) const {
  ad::Graph g(false);
  BoundParameters p(g, params_, false);
  Var f = EncodeGraph(p, image);
  PixelFeatureMap out;
  out.dim = config_.pixel_feature_dim;
  out.height = image.height / config_.feature_stride;
  out.width = image.width / config_.feature_stride;
  out.features = f.value();
  return out;
}

std::vector<std::pair<std::vector<double>, std::vector<double>>>
Segmenter::DecodeSegments(const PixelFeatureMap& features) const {
  ad::Graph g(false);
  BoundParameters p(g, params_, false);
  Var mem = g.Constant(features.features);
  Var pos = g.Constant(
      SinePositionalEncoding(features.height, features.width,
                             config_.decoder_dim));
  DecoderHeads heads = DecodeGraph(p, mem, pos, false).back();
  const Matrix& b = heads.mask_embeddings.value();
  const Matrix& s = heads.semantic_embeddings.value();
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
  for (int q = 0; q < b.rows; ++q) {
    std::vector<double> bq(b.row(q), b.row(q) + b.cols);
    std::vector<double> gq(s.row(q), s.row(q) + s.cols);
    for (double v : bq)
      ZS_CHECK(std::isfinite(v), ErrorCode::kNumeric,
               "non-finite mask embedding");
    for (double v : gq)
      ZS_CHECK(std::isfinite(v), ErrorCode::kNumeric,
               "non-finite semantic embedding");
    out.emplace_back(std::move(bq), std::move(gq));
  }
  return out;
}

std::vector<SegmentPrediction> Segmenter::Predict(const Image& image) const {
  PixelFeatureMap features = EncodePixels(image);
  auto decoded = DecodeSegments(features);
  std::vector<std::vector<double>> mask_embeddings;
  for (const auto& [b, g] : decoded) mask_embeddings.push_back(b);
  std::vector<SoftMask> masks =
      PredictMasks(mask_embeddings, features, config_.feature_stride);
  std::vector<SegmentPrediction> out;
  for (size_t q = 0; q < decoded.size(); ++q) {
    out.push_back({decoded[q].first, decoded[q].second, std::move(masks[q])});
  }
  return out;
}

Embedding Segmenter::NoObjectEmbedding() const {
  const Matrix& t0 = params_.Get("no_object");
  Embedding e;
  e.values = t0.v;
  return e;
}

Matrix SinePositionalEncoding(int height, int width, int dim) {
  ZS_CHECK(dim % 4 == 0, ErrorCode::kDimension,
           "positional encoding dim must be a multiple of 4");
  Matrix pe(height * width, dim);
  const int half = dim / 2;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double* row = pe.row(y * width + x);
      for (int i = 0; i < half / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / half);
        row[2 * i] = std::sin(y * freq);
        row[2 * i + 1] = std::cos(y * freq);
        row[half + 2 * i] = std::sin(x * freq);
        row[half + 2 * i + 1] = std::cos(x * freq);
      }
    }
  }
  return pe;
}

std::vector<SoftMask> PredictMasks(
    const std::vector<std::vector<double>>& mask_embeddings,
    const PixelFeatureMap& features, int stride) {
  ZS_CHECK(stride >= 1, ErrorCode::kDimension, "stride must be >= 1");
  std::vector<SoftMask> out;
  const int oh = features.height * stride;
  const int ow = features.width * stride;
  for (const auto& b : mask_embeddings) {
    ZS_CHECK(static_cast<int>(b.size()) == features.dim, ErrorCode::kDimension,
             "mask embedding dim does not match feature dim");
    SoftMask low(features.height, features.width);
    for (int h = 0; h < features.height; ++h) {
      for (int w = 0; w < features.width; ++w) {
        const double* f = features.at(h, w);
        double dot = 0.0;
        for (int k = 0; k < features.dim; ++k) dot += b[k] * f[k];
        low.at(h, w) = ad::SigmoidScalar(dot);
      }
    }
    SoftMask full(oh, ow);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) full.at(y, x) = low.at(y / stride, x / stride);
    out.push_back(std::move(full));
  }
  return out;
}

Matrix PixelZeroShotFromEmbeddings(const Matrix& pixel_embeddings,
                                   const TextEmbeddingTable& table,
                                   double temperature) {
  ZS_CHECK(temperature > 0.0, ErrorCode::kConfig, "temperature must be > 0");
  ZS_CHECK(table.size() >= 1, ErrorCode::kConfig, "no classes to score");
  ZS_CHECK(pixel_embeddings.cols == table.dim(), ErrorCode::kDimension,
           "pixel embedding dim does not match the text table");
  const int k = table.size();
  std::vector<Embedding> normed;
  for (const auto& e : table.embeddings) normed.push_back(Normalized(e));
  Matrix probs(pixel_embeddings.rows, k);
  std::vector<double> logits(k);
  for (int i = 0; i < pixel_embeddings.rows; ++i) {
    const double* row = pixel_embeddings.row(i);
    double n = 0.0;
    for (int j = 0; j < pixel_embeddings.cols; ++j) n += row[j] * row[j];
    n = std::max(std::sqrt(n), 1e-12);
    double m = -1e300;
    for (int c = 0; c < k; ++c) {
      double dot = 0.0;
      for (int j = 0; j < pixel_embeddings.cols; ++j)
        dot += row[j] * normed[c].values[j];
      logits[c] = dot / n / temperature;
      m = std::max(m, logits[c]);
    }
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(logits[c] - m);
    for (int c = 0; c < k; ++c) probs(i, c) = std::exp(logits[c] - m) / s;
  }
  return probs;
}

Matrix PixelZeroShotProbabilities(const Segmenter& model, const Image& image,
                                  const TextEmbeddingTable& table,
                                  double temperature) {
  ad::Graph g(false);
  BoundParameters p(g, model.params(), false);
  Var features = model.EncodeGraph(p, image);
  Var proj = model.PixelProjectionGraph(p, features);
  Matrix low = PixelZeroShotFromEmbeddings(proj.value(), table, temperature);
  const int s = model.config().feature_stride;
  const int fw = image.width / s;
  Matrix full(image.height * image.width, low.cols);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < low.cols; ++c)
        full(y * image.width + x, c) = low((y / s) * fw + x / s, c);
  return full;
}

}  // namespace zegseg
