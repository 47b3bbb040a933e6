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

#ifndef ZEGSEG_TRAINING_H_
#define ZEGSEG_TRAINING_H_

// Set-prediction training: bipartite matching of queries to ground-truth
// segments, the per-segment losses, and the optimisation loop. Training only
// ever sees seen classes.

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "zegseg/autodiff.h"
#include "zegseg/embedding.h"
#include "zegseg/model.h"
#include "zegseg/types.h"

namespace zegseg {

// Sentinel target for queries without a matched segment.
inline constexpr int kNoObject = -1;

struct LossWeights {
  double cls = 1.0;
  double dice = 1.0;
  double focal = 20.0;
  double no_object = 0.1;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double dice_eps = 1.0;

  void Validate() const;
};

// (query, segment) pairs, sorted by query.
using Assignment = std::vector<std::pair<int, int>>;

// Minimum-cost assignment of every column (segment) to a distinct row
// (query). Among equal-cost optima, returns the one whose sequence of
// queries for segments 0, 1, ... is lexicographically smallest.
// cost: rows = queries (N), cols = segments (M), N >= M.
Assignment HungarianMatch(const ad::Matrix& cost);

// Sum of cost over the assignment in segment order.
double AssignmentCost(const ad::Matrix& cost, const Assignment& assignment);

inline constexpr double kProbClamp = 1e-7;

// Plain loss values. `valid` (same length, 1 = counted) may be empty, meaning
// every pixel counts.
double DiceLoss(std::span<const double> probs, std::span<const uint8_t> target,
                std::span<const uint8_t> valid, double eps);
double FocalLoss(std::span<const double> probs,
                 std::span<const uint8_t> target,
                 std::span<const uint8_t> valid, double alpha, double gamma);
// -ln p[target], scaled by no_object_weight when is_no_object.
double ClassificationLoss(std::span<const double> probs, int target,
                          bool is_no_object, double no_object_weight);

// -p(gt_class) + w_dice * dice + w_focal * focal.
double MatchingCost(double prob_gt_class, std::span<const double> mask_probs,
                    std::span<const uint8_t> gt_mask,
                    std::span<const uint8_t> valid, const LossWeights& w);

// Ground truth for one image expressed in classifier columns.
struct SetTargets {
  std::vector<int> columns;  // classifier column (1..K; 0 is no-object)
  std::vector<std::vector<uint8_t>> masks;  // flattened H*W
  std::vector<uint8_t> valid;               // flattened H*W; empty = all
};

struct SetLoss {
  ad::Var loss;
  Assignment assignment;
};

// Loss of one image's set prediction.
//   class_logits: N x (K+1), column 0 = no-object
//   mask_logits:  N x (H*W) at target resolution
// The assignment is computed from the current values unless `fixed` is
// given; either way it is a constant of differentiation.
SetLoss SetPredictionLoss(ad::Var class_logits, ad::Var mask_logits,
                          const SetTargets& targets, const LossWeights& w,
                          const Assignment* fixed = nullptr);

// N x (K+1) cosine logits / temperature with the no-object entry first.
ad::Var CosineClassLogits(ad::Var semantic, ad::Var no_object,
                          ad::Var class_table, double temperature);

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-4;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  int steps = 200;
  int batch_size = 2;

  void Validate() const;
};

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  OptimizerConfig optimizer;
  // Apply the set loss after every decoder layer.
  bool deep_supervision = false;
  uint64_t seed = 0;
};

// Labels of a sample mapped to classifier columns of the seen table.
// Throws kConfig when a label is not a seen class.
SetTargets MakeSetTargets(const Sample& sample,
                          const std::vector<int>& vocab_to_column);

struct BatchLoss {
  double loss = 0.0;
  // Same order as ParameterStore::tensors.
  std::vector<ad::Matrix> grads;
  std::vector<Assignment> assignments;
};

// Batch-averaged loss and exact gradients of every parameter.
//   seen_table: classifier table over seen classes, in column order 1..K
//   vocab_to_column: dataset vocabulary index -> column (or -1 if unseen)
// `fixed` holds one assignment per sample when matching must be frozen.
BatchLoss ComputeBatchLoss(const Segmenter& model,
                           std::span<const Sample* const> batch,
                           const TextEmbeddingTable& seen_table,
                           const std::vector<int>& vocab_to_column,
                           const TrainConfig& config,
                           const std::vector<Assignment>* fixed = nullptr);

struct TrainResult {
  Segmenter model;
  std::vector<double> loss_history;
};

using StepCallback = std::function<void(int step, double loss)>;

// Trains on `data` whose ground truth must only contain classes present in
// `seen_table`. The model kind (segment or pixel baseline) comes from
// config.model.kind.
TrainResult Train(const Dataset& data, const TextEmbeddingTable& seen_table,
                  const TrainConfig& config,
                  const StepCallback& on_step = nullptr);

// Mean of the first and last `window` entries.
// Mean loss over every sample of `data`, one sample per batch, at the
// model's current parameters. Classes outside `seen_table` are an error.
double DatasetLoss(const Segmenter& model, const Dataset& data,
                   const TextEmbeddingTable& seen_table,
                   const TrainConfig& config);

double SmoothedLoss(const std::vector<double>& history, bool head, int window);

// Rounds every parameter to the nearest float32.
void RoundToFloat(ParameterStore& params);

}  // namespace zegseg

#endif  // ZEGSEG_TRAINING_H_
