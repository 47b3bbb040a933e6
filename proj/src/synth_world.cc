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

#include "zegseg/synth_world.h"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <limits>
#include <random>

#include "zegseg/error.h"
#include "zegseg/rng.h"

namespace zegseg {

const char* ShapeKindName(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kRectangle: return "rectangle";
    case ShapeKind::kDisk: return "disk";
    case ShapeKind::kStripe: return "stripe";
  }
  return "?";
}

ShapeKind ParseShapeKind(const std::string& name) {
  if (name == "rectangle") return ShapeKind::kRectangle;
  if (name == "disk") return ShapeKind::kDisk;
  if (name == "stripe") return ShapeKind::kStripe;
  Fail(ErrorCode::kConfig, "unknown shape kind '" + name + "'");
}

std::vector<std::string> WorldConfig::ClassNames() const {
  std::vector<std::string> out;
  for (const auto& c : classes) out.push_back(c.name);
  return out;
}

int WorldConfig::IndexOf(const std::string& name) const {
  for (size_t i = 0; i < classes.size(); ++i)
    if (classes[i].name == name) return static_cast<int>(i);
  return -1;
}

int WorldConfig::embed_dim() const {
  return parts.empty() ? 0 : static_cast<int>(parts[0].direction.size());
}

std::vector<double> ClassAttribute(const WorldConfig& world,
                                   const std::vector<int>& parts) {
  std::vector<double> a(world.embed_dim(), 0.0);
  for (int p : parts) {
    ZS_CHECK(p >= 0 && p < static_cast<int>(world.parts.size()),
             ErrorCode::kConfig, "part index out of range");
    for (size_t j = 0; j < a.size(); ++j) a[j] += world.parts[p].direction[j];
  }
  return Normalized(Embedding{a, false}).values;
}

void WorldConfig::Validate() const {
  ZS_CHECK(height > 0 && width > 0 && channels > 0, ErrorCode::kConfig,
           "world image size must be positive");
  ZS_CHECK(!parts.empty(), ErrorCode::kConfig, "world has no parts");
  ZS_CHECK(!classes.empty(), ErrorCode::kConfig, "world has no classes");
  ZS_CHECK(IndexOf(background) >= 0, ErrorCode::kConfig,
           "background class '" + background + "' not in the class list");
  ZS_CHECK(static_cast<int>(classes.size()) <= kMaxClasses, ErrorCode::kConfig,
           "too many classes");
  const int d = embed_dim();
  ZS_CHECK(d > 0, ErrorCode::kConfig, "part directions are empty");
  for (const auto& p : parts) {
    ZS_CHECK(static_cast<int>(p.direction.size()) == d, ErrorCode::kDimension,
             "part directions differ in dimension");
    ZS_CHECK(std::abs(Norm(p.direction) - 1.0) < 1e-9, ErrorCode::kConfig,
             "part direction is not a unit vector");
    ZS_CHECK(static_cast<int>(p.color.size()) == channels, ErrorCode::kConfig,
             "part colour has the wrong channel count");
    ZS_CHECK(p.amplitude >= 0.0, ErrorCode::kConfig,
             "texture amplitude must be >= 0");
  }
  std::set<std::string> names;
  for (const auto& c : classes) {
    ZS_CHECK(names.insert(c.name).second, ErrorCode::kConfig,
             "duplicate class name '" + c.name + "'");
    ZS_CHECK(!c.parts.empty(), ErrorCode::kConfig,
             "class '" + c.name + "' has no parts");
    ZS_CHECK(static_cast<int>(c.attribute.size()) == d, ErrorCode::kDimension,
             "attribute dims differ for '" + c.name + "'");
    ZS_CHECK(std::abs(Norm(c.attribute) - 1.0) < 1e-9, ErrorCode::kConfig,
             "attribute of '" + c.name + "' is not a unit vector");
  }
  for (size_t i = 0; i < classes.size(); ++i)
    for (size_t j = i + 1; j < classes.size(); ++j)
      ZS_CHECK(CosineSimilarity(classes[i].attribute, classes[j].attribute) <
                   0.9,
               ErrorCode::kConfig,
               "attributes of '" + classes[i].name + "' and '" +
                   classes[j].name + "' are too similar");
  split.Validate();
  std::set<std::string> covered(split.seen.begin(), split.seen.end());
  covered.insert(split.unseen.begin(), split.unseen.end());
  ZS_CHECK(covered == names, ErrorCode::kConfig,
           "split must cover exactly the class list");
  ZS_CHECK(min_objects >= 0 && max_objects >= min_objects, ErrorCode::kConfig,
           "bad objects-per-image range");
  ZS_CHECK(min_object_size >= 1 && max_object_size >= min_object_size,
           ErrorCode::kConfig, "bad object size range");
  ZS_CHECK(cell_size >= 1, ErrorCode::kConfig, "cell size must be >= 1");
  ZS_CHECK(cell_amplitude >= 0.0 && text_noise >= 0.0 && image_noise >= 0.0,
           ErrorCode::kConfig, "noise levels must be >= 0");
  ZS_CHECK(min_gap >= 0, ErrorCode::kConfig, "min_gap must be >= 0");
  ZS_CHECK(max_place_attempts >= 1, ErrorCode::kConfig,
           "max_place_attempts must be >= 1");
}

namespace {

const char* const kObjectNames[] = {"brick", "cloud", "grass",  "metal",
                                    "sand",  "water", "wood",   "stone",
                                    "leaf",  "fabric", "glass", "snow",
                                    "rust",  "moss",  "marble", "clay"};

std::vector<double> UnitL1Row(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> r(n);
  double l1 = 0.0;
  for (double& x : r) {
    x = normal(rng);
    l1 += std::abs(x);
  }
  for (double& x : r) x /= l1;
  return r;
}

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> Subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

constexpr double kMinPartColorDistance = 0.15;

}  // namespace

WorldConfig MakeDefaultWorld(uint64_t seed, const DefaultWorldOptions& opt) {
  ZS_CHECK(opt.embed_dim > 0 && opt.latent_dim > 0, ErrorCode::kConfig,
           "embedding and latent dims must be positive");
  ZS_CHECK(opt.num_parts >= 1 && opt.parts_per_class >= 1 &&
               opt.parts_per_class <= opt.num_parts,
           ErrorCode::kConfig, "bad part counts");
  ZS_CHECK(opt.num_seen_objects >= 0 && opt.num_unseen >= 0,
           ErrorCode::kConfig, "class counts must be >= 0");
  WorldConfig w;
  w.seed = seed;
  auto rng = MakeRng(seed, {HashString("world")});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  std::vector<std::vector<double>> q(opt.embed_dim,
                                     std::vector<double>(opt.latent_dim));
  for (auto& row : q)
    for (double& x : row) x = normal(rng);
  std::vector<std::vector<double>> color_rows;
  for (int c = 0; c < w.channels; ++c)
    color_rows.push_back(UnitL1Row(rng, opt.latent_dim));
  const std::vector<double> amp_row = UnitL1Row(rng, opt.latent_dim);

  // Object palette plus one background part, all mutually distinguishable
  // in colour and in direction. Object parts also keep pairwise cosines
  // above min_part_cosine.
  for (int p = 0; p <= opt.num_parts; ++p) {
    bool ok = false;
    for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
      std::vector<double> z(opt.latent_dim);
      for (double& x : z) x = unif(rng);
      std::vector<double> dir(opt.embed_dim);
      for (int r = 0; r < opt.embed_dim; ++r) dir[r] = Dot(q[r], z);
      const double n = Norm(dir);
      if (n < 1e-6) continue;
      for (double& x : dir) x /= n;
      SynthPart part;
      for (const auto& row : color_rows)
        part.color.push_back(0.5 + opt.color_scale * Dot(row, z));
      part.amplitude = opt.min_amplitude + 0.5 *
                                               (opt.max_amplitude - opt.min_amplitude) *
                                               (1.0 + Dot(amp_row, z));
      part.direction = std::move(dir);
      ok = true;
      for (const auto& prev : w.parts) {
        const double cosine = Dot(prev.direction, part.direction);
        if (p < opt.num_parts && cosine < opt.min_part_cosine) ok = false;
        if (cosine >= opt.max_cosine ||
            Dist2(prev.color, part.color) <
                kMinPartColorDistance * kMinPartColorDistance)
          ok = false;
      }
      if (ok) w.parts.push_back(std::move(part));
    }
    ZS_CHECK(ok, ErrorCode::kGeneration, "could not sample distinct parts");
  }

  const int total_objects = opt.num_seen_objects + opt.num_unseen;
  std::vector<std::vector<int>> pool = Subsets(opt.num_parts, opt.parts_per_class);
  ZS_CHECK(static_cast<int>(pool.size()) >= total_objects, ErrorCode::kConfig,
           "not enough part combinations for the requested classes");
  const int bg_part = opt.num_parts;
  std::vector<std::vector<int>> chosen;
  bool ok = false;
  for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.clear();
    std::vector<std::vector<double>> attrs{ClassAttribute(w, {bg_part})};
    for (const auto& combo : pool) {
      if (static_cast<int>(chosen.size()) == total_objects) break;
      bool compatible = true;
      for (size_t i = 0; i < combo.size(); ++i)
        for (size_t j = i + 1; j < combo.size(); ++j)
          if (Dot(w.parts[combo[i]].direction, w.parts[combo[j]].direction) <
              opt.min_part_cosine)
            compatible = false;
      if (!compatible) continue;
      std::vector<double> a = ClassAttribute(w, combo);
      bool far = true;
      for (const auto& prev : attrs)
        if (Dot(prev, a) >= opt.max_cosine) far = false;
      if (!far) continue;
      chosen.push_back(combo);
      attrs.push_back(std::move(a));
    }
    if (static_cast<int>(chosen.size()) < total_objects) continue;
    ok = true;
    if (opt.parts_per_class > 1) {
      std::set<int> seen_parts;
      for (int i = 0; i < opt.num_seen_objects; ++i)
        seen_parts.insert(chosen[i].begin(), chosen[i].end());
      for (int i = opt.num_seen_objects; i < total_objects; ++i)
        for (int p : chosen[i])
          if (!seen_parts.count(p)) ok = false;
      std::map<int, int> unseen_uses;
      for (int i = opt.num_seen_objects; i < total_objects; ++i)
        for (int p : chosen[i]) ++unseen_uses[p];
      for (const auto& [p, uses] : unseen_uses)
        if (uses < opt.unseen_part_sharing) ok = false;
    }
  }
  ZS_CHECK(ok, ErrorCode::kGeneration,
           "could not choose well-separated class part sets");

  SynthClass bg;
  bg.name = w.background;
  bg.parts = {bg_part};
  bg.attribute = ClassAttribute(w, bg.parts);
  w.classes.push_back(bg);
  w.split.seen.push_back(bg.name);
  for (int i = 0; i < total_objects; ++i) {
    SynthClass cls;
    cls.name = i < static_cast<int>(std::size(kObjectNames))
                   ? kObjectNames[i]
                   : "class" + std::to_string(i + 1);
    cls.shape = static_cast<ShapeKind>(i % 3);
    cls.parts = chosen[i];
    cls.attribute = ClassAttribute(w, cls.parts);
    (i < opt.num_seen_objects ? w.split.seen : w.split.unseen)
        .push_back(cls.name);
    w.classes.push_back(std::move(cls));
  }
  w.Validate();
  return w;
}

namespace {

BinaryMask DrawShape(const WorldConfig& cfg, ShapeKind kind,
                     std::mt19937_64& rng) {
  auto uni = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, std::max(lo, hi))(rng);
  };
  const int h = cfg.height, w = cfg.width;
  const int smax = std::min({cfg.max_object_size, h, w});
  const int smin = std::min(cfg.min_object_size, smax);
  BinaryMask m(h, w, 0);
  switch (kind) {
    case ShapeKind::kRectangle: {
      const int rh = uni(smin, smax), rw = uni(smin, smax);
      const int y0 = uni(0, h - rh), x0 = uni(0, w - rw);
      for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m.at(y, x) = 1;
      break;
    }
    case ShapeKind::kDisk: {
      const int d = uni(smin, smax);
      const double r = d / 2.0;
      const int y0 = uni(0, h - d), x0 = uni(0, w - d);
      for (int y = y0; y < y0 + d; ++y)
        for (int x = x0; x < x0 + d; ++x) {
          const double dy = y + 0.5 - (y0 + r), dx = x + 0.5 - (x0 + r);
          if (dy * dy + dx * dx <= r * r) m.at(y, x) = 1;
        }
      break;
    }
    case ShapeKind::kStripe: {
      const bool horizontal = uni(0, 1) == 0;
      const int thick = uni(std::max(1, smin / 2), std::max(1, smin));
      const int len_max = horizontal ? w : h;
      const int len = uni(std::min(smax, len_max), std::min(2 * smax, len_max));
      const int th = horizontal ? thick : len, tw = horizontal ? len : thick;
      const int y0 = uni(0, h - th), x0 = uni(0, w - tw);
      for (int y = y0; y < y0 + th; ++y)
        for (int x = x0; x < x0 + tw; ++x) m.at(y, x) = 1;
      break;
    }
  }
  return m;
}

// Splits the mask's bounding box into equal slabs along its longer side and
// paints slab i with part order[i].
void Paint(const WorldConfig& cfg, const std::vector<int>& order,
           const BinaryMask& mask, std::mt19937_64& rng, Image& image) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  int y0 = cfg.height, y1 = -1, x0 = cfg.width, x1 = -1;
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x)
      if (mask.at(y, x)) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
  if (y1 < 0) return;
  const bool along_x = (x1 - x0) >= (y1 - y0);
  const int span = along_x ? x1 - x0 + 1 : y1 - y0 + 1;
  const int k = static_cast<int>(order.size());
  const int ch = (cfg.height + cfg.cell_size - 1) / cfg.cell_size;
  const int cw = (cfg.width + cfg.cell_size - 1) / cfg.cell_size;
  std::vector<double> cells(static_cast<size_t>(ch) * cw * cfg.channels);
  for (double& c : cells) c = cfg.cell_amplitude * unif(rng);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      if (!mask.at(y, x)) continue;
      const int offset = along_x ? x - x0 : y - y0;
      const SynthPart& part = cfg.parts[order[offset * k / span]];
      const size_t cell =
          (static_cast<size_t>(y / cfg.cell_size) * cw + x / cfg.cell_size) *
          cfg.channels;
      for (int c = 0; c < cfg.channels; ++c) {
        const double v =
            part.color[c] + cells[cell + c] + part.amplitude * unif(rng);
        image.at(y, x, c) = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
      }
    }
  }
}

}  // namespace

constexpr int kLayoutRestarts = 20;

Sample GenScene(const WorldConfig& cfg, uint64_t index,
                const std::vector<std::string>& permitted) {
  const int bg = cfg.IndexOf(cfg.background);
  ZS_CHECK(bg >= 0, ErrorCode::kConfig, "background class missing");
  std::vector<int> pool;
  if (permitted.empty()) {
    for (int i = 0; i < static_cast<int>(cfg.classes.size()); ++i)
      if (i != bg) pool.push_back(i);
  } else {
    for (const auto& name : permitted) {
      const int i = cfg.IndexOf(name);
      ZS_CHECK(i >= 0, ErrorCode::kConfig, "unknown class '" + name + "'");
      if (i != bg) pool.push_back(i);
    }
  }
  auto rng = MakeRng(cfg.seed, {HashString("scene"), index});
  const int hi = std::min<int>(cfg.max_objects, static_cast<int>(pool.size()));
  const int lo = std::min(cfg.min_objects, hi);
  const int k = std::uniform_int_distribution<int>(lo, hi)(rng);
  for (int i = 0; i < k; ++i) {
    const int j = std::uniform_int_distribution<int>(
        i, static_cast<int>(pool.size()) - 1)(rng);
    std::swap(pool[i], pool[j]);
  }

  // A scene whose layout gets stuck is re-laid from scratch a few times
  // before giving up.
  LabelMap labels(cfg.height, cfg.width, bg);
  BinaryMask occupied;
  std::vector<std::pair<int, BinaryMask>> placed;
  bool laid = false;
  for (int restart = 0; restart < kLayoutRestarts && !laid; ++restart) {
    occupied = BinaryMask(cfg.height, cfg.width, 0);
    BinaryMask reserved(cfg.height, cfg.width, 0);  // occupied, dilated by min_gap
    placed.clear();
    laid = true;
    for (int i = 0; i < k && laid; ++i) {
      const int cls = pool[i];
      bool ok = false;
      for (int attempt = 0; attempt < cfg.max_place_attempts && !ok; ++attempt) {
        BinaryMask m = DrawShape(cfg, cfg.classes[cls].shape, rng);
        bool clash = m.count() == 0;
        for (size_t p = 0; p < m.size() && !clash; ++p)
          clash = m.bits[p] && reserved.bits[p];
        if (clash) continue;
        for (size_t p = 0; p < m.size(); ++p)
          if (m.bits[p]) occupied.bits[p] = 1;
        const int g = cfg.min_gap;
        for (int y = 0; y < cfg.height; ++y)
          for (int x = 0; x < cfg.width; ++x) {
            if (!m.at(y, x)) continue;
            for (int yy = std::max(0, y - g); yy <= std::min(cfg.height - 1, y + g); ++yy)
              for (int xx = std::max(0, x - g); xx <= std::min(cfg.width - 1, x + g); ++xx)
                reserved.at(yy, xx) = 1;
          }
        placed.emplace_back(cls, std::move(m));
        ok = true;
      }
      laid = ok;
    }
  }
  ZS_CHECK(laid, ErrorCode::kGeneration,
           "scene " + std::to_string(index) +
               ": could not place the shapes without overlap");
  ZS_CHECK(occupied.count() < occupied.size(), ErrorCode::kGeneration,
           "scene " + std::to_string(index) + ": objects cover the background");

  Sample s;
  s.image = Image(cfg.height, cfg.width, cfg.channels);
  BinaryMask background(cfg.height, cfg.width, 0);
  for (size_t p = 0; p < background.size(); ++p)
    background.bits[p] = occupied.bits[p] ? 0 : 1;
  Paint(cfg, cfg.classes[bg].parts, background, rng, s.image);
  for (const auto& [cls, mask] : placed) {
    std::vector<int> order = cfg.classes[cls].parts;
    std::shuffle(order.begin(), order.end(), rng);
    Paint(cfg, order, mask, rng, s.image);
    for (size_t p = 0; p < mask.size(); ++p)
      if (mask.bits[p]) labels.labels[p] = cls;
  }
  s.truth = RegionsFromLabelMap(labels);
  return s;
}

Dataset GenDataset(const WorldConfig& cfg, uint64_t first, int count,
                   const std::vector<std::string>& permitted) {
  ZS_CHECK(count >= 0, ErrorCode::kConfig, "scene count must be >= 0");
  Dataset d;
  d.vocabulary = cfg.ClassNames();
  for (int i = 0; i < count; ++i)
    d.samples.push_back(GenScene(cfg, first + i, permitted));
  return d;
}

Embedding OracleTextEmbedding(const SynthClass& cls, double sigma,
                              uint64_t seed) {
  ZS_CHECK(sigma >= 0.0, ErrorCode::kConfig, "text noise must be >= 0");
  if (sigma == 0.0) return Embedding{cls.attribute, true};
  for (uint64_t attempt = 0; attempt < 16; ++attempt) {
    auto rng = MakeRng(seed, {HashString("text"), HashString(cls.name), attempt});
    std::normal_distribution<double> normal(0.0, sigma);
    Embedding e{cls.attribute, false};
    for (double& x : e.values) x += normal(rng);
    if (Norm(e.values) > 1e-12) return Normalized(e);
  }
  Fail(ErrorCode::kDegenerateEmbedding,
       "text embedding for '" + cls.name + "' degenerate after retries");
}

OracleTextProvider::OracleTextProvider(const WorldConfig& world, uint64_t seed)
    : world_(&world), seed_(seed) {}

int OracleTextProvider::dim() const { return world_->embed_dim(); }

int OracleTextProvider::ClassOf(const std::string& text) const {
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  int best = -1;
  size_t best_len = 0;
  for (size_t i = 0; i < world_->classes.size(); ++i) {
    const std::string& name = world_->classes[i].name;
    for (size_t pos = text.find(name); pos != std::string::npos;
         pos = text.find(name, pos + 1)) {
      const bool left = pos == 0 || !is_word(text[pos - 1]);
      const size_t end = pos + name.size();
      const bool right = end == text.size() || !is_word(text[end]);
      if (left && right && name.size() > best_len) {
        best = static_cast<int>(i);
        best_len = name.size();
      }
    }
  }
  return best;
}

Embedding OracleTextProvider::Embed(const std::string& text) const {
  const int c = ClassOf(text);
  ZS_CHECK(c >= 0, ErrorCode::kProvider,
           "text '" + text + "' names no class of the world");
  return OracleTextEmbedding(world_->classes[c], world_->text_noise,
                             seed_ ^ HashString(text));
}

LoggingTextProvider::LoggingTextProvider(const OracleTextProvider& inner)
    : inner_(&inner) {}

Embedding LoggingTextProvider::Embed(const std::string& text) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    queries_.push_back(text);
    const int c = inner_->ClassOf(text);
    if (c >= 0) touched_.insert(c);
  }
  return inner_->Embed(text);
}

std::vector<std::string> LoggingTextProvider::queries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return queries_;
}

std::set<int> LoggingTextProvider::classes_touched() const {
  std::lock_guard<std::mutex> lock(mu_);
  return touched_;
}

constexpr double kFillShare = 0.1;
constexpr int kBlockSize = 8;
constexpr double kMatchRadius = 0.05;

std::vector<double> OraclePartShares(const Image& image,
                                     const WorldConfig& world) {
  ZS_CHECK(image.channels == world.channels, ErrorCode::kDimension,
           "sub-image channel count differs from the world");
  ZS_CHECK(image.height > 0 && image.width > 0, ErrorCode::kDimension,
           "empty sub-image");
  const int k = static_cast<int>(world.parts.size());
  const size_t npx = image.num_pixels();
  // Every painted part carries per-pixel texture, so one exact colour
  // covering a sizeable share of the sub-image can only be fill.
  std::map<std::vector<long>, size_t> colour_counts;
  std::vector<std::vector<long>> keys(npx);
  for (size_t i = 0; i < npx; ++i) {
    keys[i].resize(image.channels);
    for (int c = 0; c < image.channels; ++c)
      keys[i][c] = std::lround(image.data[i * image.channels + c] * 65535.0);
    ++colour_counts[keys[i]];
  }
  const std::vector<long>* fill = nullptr;
  size_t fill_count = 0;
  for (const auto& [key, count] : colour_counts)
    if (count > fill_count) {
      fill_count = count;
      fill = &key;
    }
  std::vector<uint8_t> use(npx, 1);
  if (fill_count < npx &&
      static_cast<double>(fill_count) >= kFillShare * static_cast<double>(npx))
    for (size_t i = 0; i < npx; ++i)
      if (keys[i] == *fill) use[i] = 0;

  const int bh = kBlockSize, bw = kBlockSize;
  struct Block {
    int part;
    double weight;
    bool matched;
  };
  std::vector<Block> blocks;
  std::vector<double> mean(image.channels), sq(image.channels);
  for (int y0 = 0; y0 < image.height; y0 += bh) {
    for (int x0 = 0; x0 < image.width; x0 += bw) {
      const int y1 = std::min(image.height, y0 + bh);
      const int x1 = std::min(image.width, x0 + bw);
      double n = 0.0;
      std::fill(mean.begin(), mean.end(), 0.0);
      std::fill(sq.begin(), sq.end(), 0.0);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          if (!use[static_cast<size_t>(y) * image.width + x]) continue;
          n += 1.0;
          for (int c = 0; c < image.channels; ++c) {
            const double v = image.at(y, x, c);
            mean[c] += v;
            sq[c] += v * v;
          }
        }
      if (n == 0.0) continue;
      double std_avg = 0.0;
      for (int c = 0; c < image.channels; ++c) {
        mean[c] /= n;
        std_avg += std::sqrt(std::max(0.0, sq[c] / n - mean[c] * mean[c]));
      }
      std_avg /= image.channels;
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i) {
        const SynthPart& part = world.parts[i];
        const double ds = std_avg - part.amplitude / std::sqrt(3.0);
        const double d = Dist2(mean, part.color) + ds * ds;
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      blocks.push_back({best, n, best_d <= kMatchRadius * kMatchRadius});
    }
  }
  const bool none_match = std::none_of(
      blocks.begin(), blocks.end(), [](const Block& b) { return b.matched; });
  std::vector<double> shares(k, 0.0);
  double total = 0.0;
  for (const auto& b : blocks) {
    if (!b.matched && !none_match) continue;
    shares[b.part] += b.weight;
    total += b.weight;
  }
  for (double& s : shares) s /= total;
  return shares;
}

Embedding OracleImageEmbedding(const Image& image, const WorldConfig& world,
                               uint64_t seed) {
  const std::vector<double> shares = OraclePartShares(image, world);
  Embedding e;
  e.values.assign(world.embed_dim(), 0.0);
  for (size_t p = 0; p < shares.size(); ++p)
    for (size_t j = 0; j < e.values.size(); ++j)
      e.values[j] += shares[p] * world.parts[p].direction[j];
  if (world.image_noise > 0.0) {
    uint64_t key = HashString("image");
    for (double v : image.data)
      key = (key ^ static_cast<uint64_t>(std::llround(v * 65535.0))) *
            1099511628211ull;
    auto rng = MakeRng(seed, {key});
    std::normal_distribution<double> normal(0.0, world.image_noise);
    for (double& x : e.values) x += normal(rng);
  }
  if (Norm(e.values) <= 1e-12) {
    // Shares cancelled out; fall back to the dominant part.
    const size_t p = std::max_element(shares.begin(), shares.end()) -
                     shares.begin();
    e.values = world.parts[p].direction;
  }
  return Normalized(e);
}

OracleImageProvider::OracleImageProvider(const WorldConfig& world,
                                         uint64_t seed)
    : world_(&world), seed_(seed) {}

Embedding OracleImageProvider::Embed(const Image& image) const {
  return OracleImageEmbedding(image, *world_, seed_);
}

int OracleImageProvider::dim() const { return world_->embed_dim(); }

}  // namespace zegseg
