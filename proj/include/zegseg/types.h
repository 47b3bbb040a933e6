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

#ifndef ZEGSEG_TYPES_H_
#define ZEGSEG_TYPES_H_

// Dense grids and class bookkeeping shared by every module.

#include <cstdint>
#include <string>
#include <vector>

namespace zegseg {

// Reserved label outside every vocabulary. Excluded from losses and metrics.
inline constexpr int kIgnore = 255;
// Largest vocabulary representable in an 8-bit label map.
inline constexpr int kMaxClasses = 255;
inline constexpr double kDefaultThreshold = 0.5;

// Row-major, channel-interleaved intensities in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int h, int w, int c) {
    return data[(static_cast<size_t>(h) * width + w) * channels + c];
  }
  double at(int h, int w, int c) const {
    return data[(static_cast<size_t>(h) * width + w) * channels + c];
  }
  size_t num_pixels() const { return static_cast<size_t>(height) * width; }

  // Throws kInvariant on bad dims, lengths, or out-of-range values.
  void Validate() const;
};

struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(int h, int w, int fill = kIgnore);

  int& at(int h, int w) { return labels[static_cast<size_t>(h) * width + w]; }
  int at(int h, int w) const {
    return labels[static_cast<size_t>(h) * width + w];
  }
  size_t size() const { return labels.size(); }
};

struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int h, int w, uint8_t fill = 0);

  uint8_t& at(int h, int w) { return bits[static_cast<size_t>(h) * width + w]; }
  uint8_t at(int h, int w) const {
    return bits[static_cast<size_t>(h) * width + w];
  }
  size_t count() const;
  size_t size() const { return bits.size(); }
};

struct SoftMask {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  SoftMask() = default;
  SoftMask(int h, int w, double fill = 0.0);

  double& at(int h, int w) {
    return values[static_cast<size_t>(h) * width + w];
  }
  double at(int h, int w) const {
    return values[static_cast<size_t>(h) * width + w];
  }
  size_t size() const { return values.size(); }
};

struct Region {
  int class_id = 0;
  BinaryMask mask;
};

struct GroundTruthSegmentation {
  std::vector<Region> regions;
};

enum class SplitMode { kGzs3, kZs3 };

// Seen and unseen class names. The vocabulary order used for label indices
// lives with the dataset; ClassSplit only says which names are which.
struct ClassSplit {
  std::vector<std::string> seen;
  std::vector<std::string> unseen;
  SplitMode mode = SplitMode::kGzs3;

  void Validate() const;
};

// ClassSplit resolved against a vocabulary.
struct SplitIndex {
  std::vector<int> seen;    // vocabulary indices, split order
  std::vector<int> unseen;  // vocabulary indices, split order
  std::vector<bool> is_seen;
  std::vector<bool> is_unseen;
  SplitMode mode = SplitMode::kGzs3;
  int num_classes = 0;
};

SplitIndex ResolveSplit(const ClassSplit& split,
                        const std::vector<std::string>& vocabulary);

struct Sample {
  Image image;
  GroundTruthSegmentation truth;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> vocabulary;

  size_t size() const { return samples.size(); }
  void Validate() const;
};

// Each pixel gets the class of its covering region; uncovered pixels get
// kIgnore. Overlapping regions are an invariant violation.
LabelMap LabelMapFromRegions(const GroundTruthSegmentation& gt, int height,
                             int width);

// One region per distinct non-IGNORE label, ordered by class index.
GroundTruthSegmentation RegionsFromLabelMap(const LabelMap& labels);

// output = 1 iff value >= threshold.
BinaryMask Binarize(const SoftMask& mask, double threshold = kDefaultThreshold);

// Pixels labelled class_id.
BinaryMask RegionMask(const LabelMap& labels, int class_id);

}  // namespace zegseg

#endif  // ZEGSEG_TYPES_H_
