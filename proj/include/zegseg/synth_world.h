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

#ifndef ZEGSEG_SYNTH_WORLD_H_
#define ZEGSEG_SYNTH_WORLD_H_

// Synthetic scenes and a synthetic vision-language embedding oracle.
//
// Appearance is built from a palette of parts. Each part has a colour and a
// texture amplitude that are affine in a latent code z_p, and a unit
// direction v_p = normalize(Q z_p) in the shared embedding space. A class
// is a set of parts (painted as adjacent pieces of one object) and its
// attribute vector is normalize(sum of its part directions). Unseen classes
// recombine parts that seen classes already use, so the appearance-to-
// attribute map learned on seen classes carries over, but only for a model
// that looks at a whole segment.

#include <cstdint>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "zegseg/embedding.h"
#include "zegseg/types.h"

namespace zegseg {

enum class ShapeKind { kRectangle, kDisk, kStripe };

const char* ShapeKindName(ShapeKind kind);
ShapeKind ParseShapeKind(const std::string& name);

struct SynthPart {
  std::vector<double> color;      // per-channel base intensity
  double amplitude = 0.0;         // per-pixel texture noise amplitude
  std::vector<double> direction;  // unit vector in the embedding space
};

struct SynthClass {
  std::string name;
  std::vector<double> attribute;  // unit vector
  ShapeKind shape = ShapeKind::kRectangle;
  std::vector<int> parts;         // indices into WorldConfig::parts
};

struct WorldConfig {
  int height = 64;
  int width = 64;
  int channels = 3;
  std::vector<SynthPart> parts;
  std::vector<SynthClass> classes;  // vocabulary order
  std::string background = "background";
  ClassSplit split;
  int min_objects = 1;
  int max_objects = 3;
  int min_object_size = 14;
  int max_object_size = 28;
  // Objects keep at least this many background pixels between them.
  int min_gap = 3;
  // Blotchy colour variation: each channel of every cell_size x cell_size
  // cell of a piece is shifted by U(-cell_amplitude, cell_amplitude).
  int cell_size = 8;
  double cell_amplitude = 0.0;
  double text_noise = 0.0;
  double image_noise = 0.0;
  int max_place_attempts = 200;
  uint64_t seed = 0;

  std::vector<std::string> ClassNames() const;
  int IndexOf(const std::string& name) const;  // -1 if absent
  int embed_dim() const;
  void Validate() const;
};

// normalize(sum of the given part directions).
std::vector<double> ClassAttribute(const WorldConfig& world,
                                   const std::vector<int>& parts);

struct DefaultWorldOptions {
  int embed_dim = 16;
  int latent_dim = 8;
  int num_parts = 6;  // object palette; the background has its own part
  int parts_per_class = 2;
  int num_seen_objects = 8;
  int num_unseen = 3;
  // Every part of an unseen class occurs in at least this many unseen
  // classes, so no single part identifies an unseen class.
  int unseen_part_sharing = 2;
  double max_cosine = 0.9;
  // Object parts are never close to opposite, so that no class attribute
  // is dominated by a small difference.
  double min_part_cosine = -0.2;
  // colour = 0.5 + color_scale * (unit-L1 row . z), z in [-1,1]^latent_dim
  double color_scale = 0.35;
  double min_amplitude = 0.02;
  double max_amplitude = 0.06;
};

// Background plus seen and unseen object classes. Every part of an unseen
// class also occurs in some seen class.
WorldConfig MakeDefaultWorld(uint64_t seed, const DefaultWorldOptions& opt = {});

// Scene `index`, objects drawn without replacement from `permitted` (class
// names, background excluded; empty = every non-background class).
Sample GenScene(const WorldConfig& cfg, uint64_t index,
                const std::vector<std::string>& permitted = {});

// Scenes [first, first + count).
Dataset GenDataset(const WorldConfig& cfg, uint64_t first, int count,
                   const std::vector<std::string>& permitted = {});

// normalize(a_c + N(0, sigma^2)), deterministic in (class name, seed).
Embedding OracleTextEmbedding(const SynthClass& cls, double sigma,
                              uint64_t seed);

// Text provider over the world. A query is attributed to the class whose
// name occurs in it as a word (longest match); each distinct prompt gets
// its own noise draw, so ensembling averages noise out.
class OracleTextProvider : public TextEmbeddingProvider {
 public:
  OracleTextProvider(const WorldConfig& world, uint64_t seed);
  Embedding Embed(const std::string& text) const override;
  int dim() const override;
  // Vocabulary index of the class a query names, or -1.
  int ClassOf(const std::string& text) const;

 private:
  const WorldConfig* world_;
  uint64_t seed_;
};

// Records every query and the classes it touched.
class LoggingTextProvider : public TextEmbeddingProvider {
 public:
  explicit LoggingTextProvider(const OracleTextProvider& inner);
  Embedding Embed(const std::string& text) const override;
  int dim() const override { return inner_->dim(); }

  std::vector<std::string> queries() const;
  std::set<int> classes_touched() const;

 private:
  const OracleTextProvider* inner_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> queries_;
  mutable std::set<int> touched_;
};

// Texture signature of a sub-image: it is cut into 8 x 8 pixel blocks,
// and each block's per-channel mean and mean standard deviation are matched
// to the nearest part, weighted by pixel count. Blocks farther than 0.05
// from every part (typically straddling two parts) are left out unless no
// block matches. A single exact colour that covers at least 10% of the
// sub-image is taken to be fill and left out (unless it is the only
// colour). Returns per-part shares summing to 1.
std::vector<double> OraclePartShares(const Image& image,
                                     const WorldConfig& world);

// normalize(sum_p share_p v_p + N(0, sigma_i^2)); noise keyed on the pixels.
Embedding OracleImageEmbedding(const Image& image, const WorldConfig& world,
                               uint64_t seed = 0);

class OracleImageProvider : public ImageEmbeddingProvider {
 public:
  explicit OracleImageProvider(const WorldConfig& world, uint64_t seed = 0);
  Embedding Embed(const Image& image) const override;
  int dim() const override;

 private:
  const WorldConfig* world_;
  uint64_t seed_;
};

}  // namespace zegseg

#endif  // ZEGSEG_SYNTH_WORLD_H_
