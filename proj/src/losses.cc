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

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "zegseg/error.h"
#include "zegseg/training.h"

namespace zegseg {

void LossWeights::Validate() const {
  ZS_CHECK(cls >= 0 && dice >= 0 && focal >= 0 && no_object >= 0 &&
               focal_alpha >= 0 && focal_gamma >= 0,
           ErrorCode::kConfig, "loss weights must be nonnegative");
  ZS_CHECK(dice_eps > 0, ErrorCode::kConfig, "dice epsilon must be > 0");
}

namespace {

bool Counted(std::span<const uint8_t> valid, size_t i) {
  return valid.empty() || valid[i] != 0;
}

void CheckSizes(std::span<const double> probs, std::span<const uint8_t> target,
                std::span<const uint8_t> valid) {
  ZS_CHECK(probs.size() == target.size() &&
               (valid.empty() || valid.size() == probs.size()),
           ErrorCode::kDimension, "mask loss inputs differ in size");
}

double ClampProb(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

}  // namespace

double DiceLoss(std::span<const double> probs, std::span<const uint8_t> target,
                std::span<const uint8_t> valid, double eps) {
  CheckSizes(probs, target, valid);
  double inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (!Counted(valid, i)) continue;
    inter += probs[i] * target[i];
    sum_p += probs[i];
    sum_g += target[i];
  }
  return 1.0 - (2.0 * inter + eps) / (sum_p + sum_g + eps);
}

double FocalLoss(std::span<const double> probs, std::span<const uint8_t> target,
                 std::span<const uint8_t> valid, double alpha, double gamma) {
  CheckSizes(probs, target, valid);
  double total = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (!Counted(valid, i)) continue;
    const double m = ClampProb(probs[i]);
    const bool pos = target[i] != 0;
    const double pt = pos ? m : 1.0 - m;
    const double at = pos ? alpha : 1.0 - alpha;
    total += at * std::pow(1.0 - pt, gamma) * -std::log(pt);
    ++count;
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double ClassificationLoss(std::span<const double> probs, int target,
                          bool is_no_object, double no_object_weight) {
  ZS_CHECK(target >= 0 && target < static_cast<int>(probs.size()),
           ErrorCode::kConfig, "classification target out of range");
  const double loss = -std::log(probs[target]);
  return is_no_object ? no_object_weight * loss : loss;
}

double MatchingCost(double prob_gt_class, std::span<const double> mask_probs,
                    std::span<const uint8_t> gt_mask,
                    std::span<const uint8_t> valid, const LossWeights& w) {
  return -prob_gt_class +
         w.dice * DiceLoss(mask_probs, gt_mask, valid, w.dice_eps) +
         w.focal * FocalLoss(mask_probs, gt_mask, valid, w.focal_alpha,
                             w.focal_gamma);
}

namespace {

// d(dice)/d(prob) for every pixel.
void DiceGrad(std::span<const double> probs, std::span<const uint8_t> target,
              std::span<const uint8_t> valid, double eps, double scale,
              double* out) {
  double inter = 0.0, sum_p = 0.0, sum_g = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (!Counted(valid, i)) continue;
    inter += probs[i] * target[i];
    sum_p += probs[i];
    sum_g += target[i];
  }
  const double a = 2.0 * inter + eps;
  const double b = sum_p + sum_g + eps;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (!Counted(valid, i)) continue;
    out[i] += scale * -(2.0 * target[i] * b - a) / (b * b);
  }
}

void FocalGrad(std::span<const double> probs, std::span<const uint8_t> target,
               std::span<const uint8_t> valid, double alpha, double gamma,
               double scale, double* out) {
  size_t count = 0;
  for (size_t i = 0; i < probs.size(); ++i)
    if (Counted(valid, i)) ++count;
  if (!count) return;
  const double inv = 1.0 / static_cast<double>(count);
  for (size_t i = 0; i < probs.size(); ++i) {
    if (!Counted(valid, i)) continue;
    const double raw = probs[i];
    // The clamp has zero slope outside its range.
    if (raw < kProbClamp || raw > 1.0 - kProbClamp) continue;
    const bool pos = target[i] != 0;
    const double pt = pos ? raw : 1.0 - raw;
    const double at = pos ? alpha : 1.0 - alpha;
    const double one_minus = 1.0 - pt;
    double d_pt = -std::pow(one_minus, gamma) / pt;
    if (gamma != 0.0)
      d_pt += gamma * std::pow(one_minus, gamma - 1.0) * std::log(pt);
    d_pt *= at;
    out[i] += scale * inv * (pos ? d_pt : -d_pt);
  }
}

}  // namespace

ad::Var CosineClassLogits(ad::Var semantic, ad::Var no_object,
                          ad::Var class_table, double temperature) {
  ZS_CHECK(temperature > 0.0, ErrorCode::kConfig, "temperature must be > 0");
  ad::Var g_n = ad::NormalizeRows(semantic);
  ad::Var l0 = ad::MatMulNT(g_n, ad::NormalizeRows(no_object));
  ad::Var lc = ad::MatMulNT(g_n, ad::NormalizeRows(class_table));
  return ad::Scale(ad::ConcatCols({l0, lc}), 1.0 / temperature);
}

SetLoss SetPredictionLoss(ad::Var class_logits, ad::Var mask_logits,
                          const SetTargets& targets, const LossWeights& w,
                          const Assignment* fixed) {
  ad::Graph* g = class_logits.graph;
  const int n = class_logits.rows();
  const int k1 = class_logits.cols();
  const int pixels = mask_logits.cols();
  const int num_segments = static_cast<int>(targets.columns.size());
  ZS_CHECK(mask_logits.rows() == n, ErrorCode::kDimension,
           "class and mask predictions disagree on query count");
  ZS_CHECK(targets.masks.size() == targets.columns.size(),
           ErrorCode::kDimension, "targets have mismatched lengths");
  for (const auto& m : targets.masks)
    ZS_CHECK(static_cast<int>(m.size()) == pixels, ErrorCode::kDimension,
             "target mask size does not match mask logits");
  for (int c : targets.columns)
    ZS_CHECK(c >= 1 && c < k1, ErrorCode::kConfig,
             "target class column out of range");

  ad::Var log_probs = ad::LogSoftmaxRows(class_logits);
  ad::Var mask_probs_var = ad::Sigmoid(mask_logits);
  const ad::Matrix& lp = log_probs.value();
  const ad::Matrix& mp = mask_probs_var.value();
  const std::span<const uint8_t> valid(targets.valid);

  SetLoss out;
  if (fixed) {
    out.assignment = *fixed;
  } else {
    ad::Matrix cost(n, num_segments);
    for (int q = 0; q < n; ++q) {
      std::span<const double> probs(mp.row(q), pixels);
      for (int m = 0; m < num_segments; ++m) {
        cost(q, m) = MatchingCost(std::exp(lp(q, targets.columns[m])), probs,
                                  targets.masks[m], valid, w);
      }
    }
    out.assignment = HungarianMatch(cost);
  }

  // Per-query classification target and weight.
  std::vector<int> cls_target(n, 0);
  std::vector<double> cls_weight(n, w.cls * w.no_object);
  for (auto [q, m] : out.assignment) {
    ZS_CHECK(q >= 0 && q < n && m >= 0 && m < num_segments,
             ErrorCode::kInvariant, "assignment index out of range");
    cls_target[q] = targets.columns[m];
    cls_weight[q] = w.cls;
  }

  double cls_loss = 0.0;
  for (int q = 0; q < n; ++q) cls_loss -= cls_weight[q] * lp(q, cls_target[q]);
  ZS_CHECK(std::isfinite(cls_loss), ErrorCode::kNumeric,
           "non-finite classification loss");
  ad::Var cls_var = g->Apply(
      ad::Matrix(1, 1, cls_loss), {log_probs},
      [g, log_probs, cls_target, cls_weight](const ad::Matrix& go) {
        ad::Matrix* gl = g->grad(log_probs);
        for (size_t q = 0; q < cls_target.size(); ++q)
          (*gl)(static_cast<int>(q), cls_target[q]) -= go.v[0] * cls_weight[q];
      });

  double mask_loss = 0.0;
  double dice_total = 0.0, focal_total = 0.0;
  for (auto [q, m] : out.assignment) {
    std::span<const double> probs(mp.row(q), pixels);
    dice_total += DiceLoss(probs, targets.masks[m], valid, w.dice_eps);
    focal_total += FocalLoss(probs, targets.masks[m], valid, w.focal_alpha,
                             w.focal_gamma);
  }
  ZS_CHECK(std::isfinite(dice_total), ErrorCode::kNumeric,
           "non-finite dice loss");
  ZS_CHECK(std::isfinite(focal_total), ErrorCode::kNumeric,
           "non-finite focal loss");
  mask_loss = w.dice * dice_total + w.focal * focal_total;
  const Assignment assignment = out.assignment;
  auto tp = std::make_shared<const SetTargets>(targets);
  ad::Var mask_var = g->Apply(
      ad::Matrix(1, 1, mask_loss), {mask_probs_var},
      [g, mask_probs_var, assignment, tp, w, pixels](const ad::Matrix& go) {
        ad::Matrix* gm = g->grad(mask_probs_var);
        const ad::Matrix& probs = mask_probs_var.value();
        const std::span<const uint8_t> vmask(tp->valid);
        for (auto [q, m] : assignment) {
          std::span<const double> pr(probs.row(q), pixels);
          DiceGrad(pr, tp->masks[m], vmask, w.dice_eps, go.v[0] * w.dice,
                   gm->row(q));
          FocalGrad(pr, tp->masks[m], vmask, w.focal_alpha, w.focal_gamma,
                    go.v[0] * w.focal, gm->row(q));
        }
      });
  out.loss = ad::AddScalars({cls_var, mask_var});
  return out;
}

}  // namespace zegseg
