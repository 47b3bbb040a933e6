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

#include "zegseg/types.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "zegseg/error.h"

namespace zegseg {

Image::Image(int h, int w, int c, double fill)
    : height(h),
      width(w),
      channels(c),
      data(static_cast<size_t>(h) * w * c, fill) {}

void Image::Validate() const {
  ZS_CHECK(height >= 1 && width >= 1, ErrorCode::kInvariant,
           "image dimensions must be positive");
  ZS_CHECK(channels == 1 || channels == 3, ErrorCode::kInvariant,
           "image must have 1 or 3 channels");
  ZS_CHECK(data.size() == num_pixels() * channels, ErrorCode::kInvariant,
           "image data length does not match dimensions");
  for (double v : data) {
    ZS_CHECK(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::kInvariant,
             "image intensity outside [0,1]");
  }
}

LabelMap::LabelMap(int h, int w, int fill)
    : height(h), width(w), labels(static_cast<size_t>(h) * w, fill) {}

BinaryMask::BinaryMask(int h, int w, uint8_t fill)
    : height(h), width(w), bits(static_cast<size_t>(h) * w, fill) {}

size_t BinaryMask::count() const {
  return static_cast<size_t>(std::count(bits.begin(), bits.end(), 1));
}

SoftMask::SoftMask(int h, int w, double fill)
    : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

void ClassSplit::Validate() const {
  std::set<std::string> seen_set(seen.begin(), seen.end());
  ZS_CHECK(seen_set.size() == seen.size(), ErrorCode::kConfig,
           "duplicate seen class name");
  std::set<std::string> unseen_set(unseen.begin(), unseen.end());
  ZS_CHECK(unseen_set.size() == unseen.size(), ErrorCode::kConfig,
           "duplicate unseen class name");
  for (const auto& name : unseen) {
    ZS_CHECK(!seen_set.count(name), ErrorCode::kConfig,
             "class '" + name + "' is both seen and unseen");
  }
  ZS_CHECK(!unseen.empty(), ErrorCode::kConfig, "unseen class list is empty");
  if (mode == SplitMode::kGzs3) {
    ZS_CHECK(!seen.empty(), ErrorCode::kConfig,
             "seen class list is empty in GZS3 mode");
  }
}

SplitIndex ResolveSplit(const ClassSplit& split,
                        const std::vector<std::string>& vocabulary) {
  split.Validate();
  std::map<std::string, int> index;
  for (size_t i = 0; i < vocabulary.size(); ++i) {
    index[vocabulary[i]] = static_cast<int>(i);
  }
  SplitIndex out;
  out.mode = split.mode;
  out.num_classes = static_cast<int>(vocabulary.size());
  out.is_seen.assign(vocabulary.size(), false);
  out.is_unseen.assign(vocabulary.size(), false);
  auto lookup = [&](const std::string& name) {
    auto it = index.find(name);
    ZS_CHECK(it != index.end(), ErrorCode::kConfig,
             "split class '" + name + "' not in vocabulary");
    return it->second;
  };
  for (const auto& name : split.seen) {
    int id = lookup(name);
    out.seen.push_back(id);
    out.is_seen[id] = true;
  }
  for (const auto& name : split.unseen) {
    int id = lookup(name);
    out.unseen.push_back(id);
    out.is_unseen[id] = true;
  }
  return out;
}

void Dataset::Validate() const {
  ZS_CHECK(vocabulary.size() <= static_cast<size_t>(kMaxClasses),
           ErrorCode::kConfig, "vocabulary too large for 8-bit label maps");
  for (const auto& sample : samples) {
    sample.image.Validate();
    for (const auto& region : sample.truth.regions) {
      ZS_CHECK(region.class_id >= 0 &&
                   region.class_id < static_cast<int>(vocabulary.size()),
               ErrorCode::kInvariant, "ground-truth class index out of range");
      ZS_CHECK(region.mask.height == sample.image.height &&
                   region.mask.width == sample.image.width,
               ErrorCode::kDimension, "region mask does not match image");
      ZS_CHECK(region.mask.count() > 0, ErrorCode::kInvariant,
               "ground-truth region is empty");
    }
  }
}

LabelMap LabelMapFromRegions(const GroundTruthSegmentation& gt, int height,
                             int width) {
  LabelMap out(height, width, kIgnore);
  for (const auto& region : gt.regions) {
    ZS_CHECK(region.mask.height == height && region.mask.width == width,
             ErrorCode::kDimension, "region mask does not fit the grid");
    ZS_CHECK(region.class_id >= 0 && region.class_id < kMaxClasses,
             ErrorCode::kInvariant, "region class index out of range");
    for (size_t i = 0; i < region.mask.bits.size(); ++i) {
      if (!region.mask.bits[i]) continue;
      ZS_CHECK(out.labels[i] == kIgnore, ErrorCode::kInvariant,
               "ground-truth regions overlap");
      out.labels[i] = region.class_id;
    }
  }
  return out;
}

GroundTruthSegmentation RegionsFromLabelMap(const LabelMap& labels) {
  std::set<int> present;
  for (int v : labels.labels) {
    if (v != kIgnore) present.insert(v);
  }
  GroundTruthSegmentation gt;
  for (int c : present) gt.regions.push_back({c, RegionMask(labels, c)});
  return gt;
}

BinaryMask Binarize(const SoftMask& mask, double threshold) {
  BinaryMask out(mask.height, mask.width);
  for (size_t i = 0; i < mask.values.size(); ++i) {
    out.bits[i] = mask.values[i] >= threshold ? 1 : 0;
  }
  return out;
}

BinaryMask RegionMask(const LabelMap& labels, int class_id) {
  BinaryMask out(labels.height, labels.width);
  for (size_t i = 0; i < labels.labels.size(); ++i) {
    out.bits[i] = labels.labels[i] == class_id ? 1 : 0;
  }
  return out;
}

}  // namespace zegseg
