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

#include "zegseg/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "zegseg/error.h"
#include "zegseg/rng.h"

namespace zegseg {

void OptimizerConfig::Validate() const {
  ZS_CHECK(learning_rate > 0, ErrorCode::kConfig, "learning_rate must be > 0");
  ZS_CHECK(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1,
           ErrorCode::kConfig, "Adam betas must be in [0,1)");
  ZS_CHECK(epsilon > 0, ErrorCode::kConfig, "Adam epsilon must be > 0");
  ZS_CHECK(weight_decay >= 0, ErrorCode::kConfig,
           "weight_decay must be >= 0");
  ZS_CHECK(grad_clip_norm >= 0, ErrorCode::kConfig,
           "grad_clip_norm must be >= 0");
  ZS_CHECK(steps >= 0, ErrorCode::kConfig, "steps must be >= 0");
  ZS_CHECK(batch_size >= 1, ErrorCode::kConfig, "batch_size must be >= 1");
}

SetTargets MakeSetTargets(const Sample& sample,
                          const std::vector<int>& vocab_to_column) {
  SetTargets t;
  const size_t pixels = sample.image.num_pixels();
  LabelMap labels = LabelMapFromRegions(sample.truth, sample.image.height,
                                        sample.image.width);
  bool any_ignore = false;
  for (int v : labels.labels) any_ignore = any_ignore || v == kIgnore;
  if (any_ignore) {
    t.valid.resize(pixels);
    for (size_t i = 0; i < pixels; ++i)
      t.valid[i] = labels.labels[i] != kIgnore ? 1 : 0;
  }
  for (const auto& region : sample.truth.regions) {
    ZS_CHECK(region.class_id >= 0 &&
                 region.class_id < static_cast<int>(vocab_to_column.size()) &&
                 vocab_to_column[region.class_id] >= 1,
             ErrorCode::kConfig,
             "training data contains class index " +
                 std::to_string(region.class_id) + " outside the seen set");
    t.columns.push_back(vocab_to_column[region.class_id]);
    t.masks.push_back(region.mask.bits);
  }
  return t;
}

namespace {

ad::Matrix TableMatrix(const TextEmbeddingTable& table) {
  ad::Matrix m(table.size(), table.dim());
  for (int c = 0; c < table.size(); ++c)
    std::copy(table.embeddings[c].values.begin(),
              table.embeddings[c].values.end(), m.row(c));
  return m;
}

// Mean per-pixel cross-entropy of the pixel baseline over seen classes.
ad::Var PixelBaselineLoss(const Segmenter& model, const BoundParameters& p,
                          const Sample& sample, const ad::Matrix& table,
                          const std::vector<int>& vocab_to_column) {
  ad::Graph& g = p.graph();
  const ModelConfig& cfg = model.config();
  const int s = cfg.feature_stride;
  const int fh = sample.image.height / s;
  const int fw = sample.image.width / s;
  ad::Var features = model.EncodeGraph(p, sample.image);
  ad::Var proj = ad::NormalizeRows(model.PixelProjectionGraph(p, features));
  ad::Var logits = ad::Scale(
      ad::MatMulNT(proj, ad::NormalizeRows(g.Constant(table))),
      1.0 / cfg.temperature);
  // Upsample per class then return to pixels x classes.
  ad::Var full = ad::Transpose(
      ad::UpsampleRows(ad::Transpose(logits), fh, fw, s));
  ad::Var log_probs = ad::LogSoftmaxRows(full);

  LabelMap labels = LabelMapFromRegions(sample.truth, sample.image.height,
                                        sample.image.width);
  std::vector<int> target(labels.size(), -1);
  int count = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const int c = labels.labels[i];
    if (c == kIgnore) continue;
    ZS_CHECK(c < static_cast<int>(vocab_to_column.size()) &&
                 vocab_to_column[c] >= 1,
             ErrorCode::kConfig,
             "training data contains class index " + std::to_string(c) +
                 " outside the seen set");
    target[i] = vocab_to_column[c] - 1;
    ++count;
  }
  const ad::Matrix& lp = log_probs.value();
  const double inv = count ? 1.0 / count : 0.0;
  double loss = 0.0;
  for (size_t i = 0; i < target.size(); ++i)
    if (target[i] >= 0) loss -= lp(static_cast<int>(i), target[i]);
  loss *= inv;
  ZS_CHECK(std::isfinite(loss), ErrorCode::kNumeric,
           "non-finite pixel classification loss");
  return g.Apply(ad::Matrix(1, 1, loss), {log_probs},
                 [&g, log_probs, target, inv](const ad::Matrix& go) {
                   ad::Matrix* gl = g.grad(log_probs);
                   for (size_t i = 0; i < target.size(); ++i)
                     if (target[i] >= 0)
                       (*gl)(static_cast<int>(i), target[i]) -= go.v[0] * inv;
                 });
}

}  // namespace

BatchLoss ComputeBatchLoss(const Segmenter& model,
                           std::span<const Sample* const> batch,
                           const TextEmbeddingTable& seen_table,
                           const std::vector<int>& vocab_to_column,
                           const TrainConfig& config,
                           const std::vector<Assignment>* fixed) {
  ZS_CHECK(!batch.empty(), ErrorCode::kConfig, "empty batch");
  ZS_CHECK(!fixed || fixed->size() == batch.size(), ErrorCode::kInvariant,
           "one fixed assignment per sample is required");
  const ModelConfig& cfg = model.config();
  ZS_CHECK(seen_table.dim() == cfg.semantic_dim, ErrorCode::kDimension,
           "text table dimension does not match the model");
  const ParameterStore& params = model.params();
  const ad::Matrix table = TableMatrix(seen_table);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  BatchLoss out;
  out.grads.reserve(params.tensors.size());
  for (const auto& t : params.tensors) out.grads.emplace_back(t.rows, t.cols);

  // Fixed summation order over samples keeps gradients reproducible.
  for (size_t b = 0; b < batch.size(); ++b) {
    const Sample& sample = *batch[b];
    ad::Graph g(true);
    BoundParameters p(g, params, true);
    ad::Var loss;
    if (cfg.kind == ModelKind::kPixelBaseline) {
      loss = PixelBaselineLoss(model, p, sample, table, vocab_to_column);
      out.assignments.emplace_back();
    } else {
      const SetTargets targets = MakeSetTargets(sample, vocab_to_column);
      const int s = cfg.feature_stride;
      const int fh = sample.image.height / s;
      const int fw = sample.image.width / s;
      ad::Var features = model.EncodeGraph(p, sample.image);
      ad::Var pos = g.Constant(SinePositionalEncoding(fh, fw, cfg.decoder_dim));
      std::vector<DecoderHeads> heads =
          model.DecodeGraph(p, features, pos, config.deep_supervision);
      ad::Var table_var = g.Constant(table);
      std::vector<ad::Var> terms;
      Assignment final_assignment;
      for (size_t l = 0; l < heads.size(); ++l) {
        ad::Var class_logits = CosineClassLogits(
            heads[l].semantic_embeddings, p["no_object"], table_var,
            cfg.temperature);
        ad::Var mask_logits = ad::UpsampleRows(
            model.MaskLogitsGraph(heads[l].mask_embeddings, features), fh, fw,
            s);
        const Assignment* frozen =
            (fixed && l + 1 == heads.size()) ? &(*fixed)[b] : nullptr;
        SetLoss sl = SetPredictionLoss(class_logits, mask_logits, targets,
                                       config.weights, frozen);
        terms.push_back(sl.loss);
        final_assignment = std::move(sl.assignment);
      }
      out.assignments.push_back(std::move(final_assignment));
      loss = terms.size() == 1 ? terms[0] : ad::AddScalars(terms);
    }
    const double value = loss.value().v[0];
    ZS_CHECK(std::isfinite(value), ErrorCode::kNumeric,
             "non-finite total loss");
    out.loss += value * inv_batch;
    g.Backward(loss);
    for (size_t i = 0; i < params.tensors.size(); ++i) {
      const ad::Matrix* gi = g.grad_if_any(p.vars()[i]);
      if (!gi) continue;
      for (size_t j = 0; j < gi->v.size(); ++j)
        out.grads[i].v[j] += gi->v[j] * inv_batch;
    }
  }
  return out;
}

void RoundToFloat(ParameterStore& params) {
  for (auto& t : params.tensors)
    for (double& v : t.v) v = static_cast<double>(static_cast<float>(v));
}

double SmoothedLoss(const std::vector<double>& history, bool head, int window) {
  if (history.empty()) return 0.0;
  const int n = std::min<int>(window, static_cast<int>(history.size()));
  double s = 0.0;
  if (head) {
    for (int i = 0; i < n; ++i) s += history[i];
  } else {
    for (int i = 0; i < n; ++i) s += history[history.size() - 1 - i];
  }
  return s / n;
}

namespace {

// Vocabulary index -> classifier column (1..K), -1 for anything unseen.
// Every labelled region must map to a column.
std::vector<int> SeenColumns(const Dataset& data,
                             const TextEmbeddingTable& seen_table) {
  std::vector<int> vocab_to_column(data.vocabulary.size(), -1);
  for (size_t v = 0; v < data.vocabulary.size(); ++v) {
    const int idx = seen_table.IndexOf(data.vocabulary[v]);
    if (idx >= 0) vocab_to_column[v] = idx + 1;
  }
  for (const auto& sample : data.samples) {
    for (const auto& region : sample.truth.regions) {
      ZS_CHECK(region.class_id >= 0 &&
                   region.class_id < static_cast<int>(vocab_to_column.size()) &&
                   vocab_to_column[region.class_id] >= 1,
               ErrorCode::kConfig,
               "training data contains a class outside the seen set: " +
                   (region.class_id >= 0 &&
                            region.class_id <
                                static_cast<int>(data.vocabulary.size())
                        ? data.vocabulary[region.class_id]
                        : std::to_string(region.class_id)));
    }
  }

  return vocab_to_column;
}

}  // namespace

TrainResult Train(const Dataset& data, const TextEmbeddingTable& seen_table,
                  const TrainConfig& config, const StepCallback& on_step) {
  config.model.Validate();
  config.weights.Validate();
  config.optimizer.Validate();
  seen_table.Validate();
  ZS_CHECK(seen_table.dim() == config.model.semantic_dim, ErrorCode::kConfig,
           "text table dimension does not match model semantic_dim");

  const std::vector<int> vocab_to_column = SeenColumns(data, seen_table);

  TrainResult result{Segmenter(config.model), {}};
  const OptimizerConfig& opt = config.optimizer;
  if (opt.steps == 0 || data.samples.empty()) return result;

  ParameterStore& params = result.model.mutable_params();
  std::vector<ad::Matrix> m1, m2;
  for (const auto& t : params.tensors) {
    m1.emplace_back(t.rows, t.cols);
    m2.emplace_back(t.rows, t.cols);
  }

  auto rng = MakeRng(config.seed, {HashString("batches")});
  std::vector<size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();

  for (int step = 1; step <= opt.steps; ++step) {
    std::vector<const Sample*> batch;
    for (int b = 0; b < opt.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&data.samples[order[cursor++]]);
    }
    BatchLoss bl = ComputeBatchLoss(result.model, batch, seen_table,
                                    vocab_to_column, config);
    result.loss_history.push_back(bl.loss);
    if (on_step) on_step(step, bl.loss);

    double clip = 1.0;
    if (opt.grad_clip_norm > 0) {
      double sq = 0.0;
      for (const auto& gm : bl.grads)
        for (double x : gm.v) sq += x * x;
      const double norm = std::sqrt(sq);
      if (norm > opt.grad_clip_norm) clip = opt.grad_clip_norm / norm;
    }
    const double bc1 = 1.0 - std::pow(opt.beta1, step);
    const double bc2 = 1.0 - std::pow(opt.beta2, step);
    for (size_t i = 0; i < params.tensors.size(); ++i) {
      auto& w = params.tensors[i].v;
      const auto& gr = bl.grads[i].v;
      auto& a = m1[i].v;
      auto& b = m2[i].v;
      for (size_t j = 0; j < w.size(); ++j) {
        const double gj = gr[j] * clip;
        a[j] = opt.beta1 * a[j] + (1.0 - opt.beta1) * gj;
        b[j] = opt.beta2 * b[j] + (1.0 - opt.beta2) * gj * gj;
        const double mhat = a[j] / bc1;
        const double vhat = b[j] / bc2;
        w[j] -= opt.learning_rate *
                (mhat / (std::sqrt(vhat) + opt.epsilon) +
                 opt.weight_decay * w[j]);
        ZS_CHECK(std::isfinite(w[j]), ErrorCode::kNumeric,
                 "parameter " + params.names[i] + " became non-finite");
      }
    }
  }
  RoundToFloat(params);
  return result;
}

double DatasetLoss(const Segmenter& model, const Dataset& data,
                   const TextEmbeddingTable& seen_table,
                   const TrainConfig& config) {
  ZS_CHECK(!data.samples.empty(), ErrorCode::kConfig, "empty dataset");
  const std::vector<int> vocab_to_column = SeenColumns(data, seen_table);
  double total = 0.0;
  for (const auto& sample : data.samples) {
    const Sample* one[] = {&sample};
    total += ComputeBatchLoss(model, one, seen_table, vocab_to_column, config)
                 .loss;
  }
  return total / static_cast<double>(data.samples.size());
}

}  // namespace zegseg
