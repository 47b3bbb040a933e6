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

#ifndef ZEGSEG_EVALUATION_H_
#define ZEGSEG_EVALUATION_H_

// Class metrics (confusion, per-class IoU, seen/unseen/harmonic means),
// class-agnostic boundary precision/recall, and the head-cost benchmark.

#include <cstdint>
#include <vector>

#include "zegseg/inference.h"
#include "zegseg/types.h"

namespace zegseg {

struct Confusion {
  int num_classes = 0;
  // counts[gt * num_classes + pred]
  std::vector<int64_t> counts;

  Confusion() = default;
  explicit Confusion(int k);

  int64_t at(int gt, int pred) const {
    return counts[static_cast<size_t>(gt) * num_classes + pred];
  }
  void Merge(const Confusion& other);
};

// Adds one image. Pixels whose ground truth is kIgnore are skipped; any other
// label outside [0, num_classes) is an error.
void ConfusionAccumulate(const LabelMap& pred, const LabelMap& gt,
                         Confusion& confusion);

struct IoUReport {
  std::vector<double> per_class;  // 0 where !present
  std::vector<bool> present;      // appears in prediction or ground truth
  double miou_seen = 0.0;
  double miou_unseen = 0.0;
  double harmonic = 0.0;
  SplitMode mode = SplitMode::kGzs3;
};

double HarmonicMean(double a, double b);

// In ZS3 mode pixels whose ground truth is a seen class are dropped, so the
// seen mean is reported as 0 and only the unseen mean is meaningful.
IoUReport MiouReport(const Confusion& confusion, const SplitIndex& split);

// Seen classes split for calibration: `num_validation` of them (never the
// excluded names, e.g. the background) are drawn as pseudo-unseen classes
// and the rest stay seen. Deterministic in `seed`.
ClassSplit HoldOutSplit(const ClassSplit& split, int num_validation,
                        uint64_t seed,
                        const std::vector<std::string>& excluded = {});

// One validation image for calibration: segment scores and masks for the
// segment model, or per-pixel probabilities for the pixel baseline.
struct CalibrationItem {
  ScoreRows class_scores;
  std::vector<SoftMask> masks;
  ad::Matrix pixel_probs;  // (H*W) x classes; used when masks is empty
  LabelMap truth;
};

struct GammaChoice {
  double gamma = 0.0;
  double harmonic = 0.0;
  std::vector<double> harmonics;  // one per candidate
};

// Calibration factor maximising the harmonic mIoU on the validation items
// (split in GZS3 mode). Ties go to the smaller gamma.
GammaChoice SelectGamma(const std::vector<CalibrationItem>& items,
                        const SplitIndex& split,
                        const std::vector<double>& candidates);

struct BoundaryReport {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  double theta = 0.0;
  int64_t matched = 0;
  int64_t num_pred = 0;
  int64_t num_gt = 0;
};

// A pixel is on the boundary when its right or lower neighbour carries a
// different label.
BinaryMask BoundaryPixels(const LabelMap& labels);

double DefaultBoundaryTolerance(int height, int width);

// One-to-one matching of boundary pixels within Euclidean distance theta,
// solved exactly (Hopcroft-Karp).
BoundaryReport BoundaryPrf(const LabelMap& pred, const LabelMap& gt,
                           double theta);
BoundaryReport BoundaryPrf(const BinaryMask& pred, const BinaryMask& gt,
                           double theta);

// Matching size between two boundary pixel sets.
int64_t MatchBoundaries(const BinaryMask& pred_boundary,
                        const BinaryMask& gt_boundary, double theta);

// Per-image mean of P, R and F.
BoundaryReport AverageBoundaryReports(const std::vector<BoundaryReport>& rs);

struct HeadTiming {
  int k = 0;
  double t_segment = 0.0;  // seconds per call, median
  double t_pixel = 0.0;
};

struct HeadBenchmarkConfig {
  int num_queries = 8;
  int height = 64;
  int width = 64;
  int embed_dim = 16;
  std::vector<int> k_values{10, 100, 1000};
  int repetitions = 5;
  // Each repetition loops the head until at least this much time passes.
  double min_rep_seconds = 0.01;
  uint64_t seed = 0;

  void Validate() const;
};

std::vector<HeadTiming> HeadComplexityBenchmark(const HeadBenchmarkConfig& cfg);

// (t_pixel(K_last) - t_pixel(K_first)) / (t_segment(K_last) - t_segment(K_first))
double PixelSegmentSlopeRatio(const std::vector<HeadTiming>& rows);

}  // namespace zegseg

#endif  // ZEGSEG_EVALUATION_H_
