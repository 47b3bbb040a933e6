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

#include <atomic>
#include <cmath>
#include <random>

#include "oracles.h"
#include "test_util.h"
#include "zegseg/inference.h"
#include "zegseg/synth_world.h"

namespace zegseg {
namespace {

Embedding Unit(std::vector<double> v) { return Normalized(Embedding{v, false}); }

TextEmbeddingTable Table(std::vector<std::vector<double>> rows,
                         std::vector<double> no_object) {
  TextEmbeddingTable t;
  for (size_t i = 0; i < rows.size(); ++i) {
    t.class_names.push_back("c" + std::to_string(i));
    t.embeddings.push_back(Unit(rows[i]));
  }
  t.no_object = Unit(no_object);
  return t;
}

SplitIndex Split(int seen, int unseen, SplitMode mode = SplitMode::kGzs3) {
  ClassSplit s;
  std::vector<std::string> vocab;
  for (int i = 0; i < seen + unseen; ++i) {
    vocab.push_back("c" + std::to_string(i));
    (i < seen ? s.seen : s.unseen).push_back(vocab.back());
  }
  s.mode = mode;
  return ResolveSplit(s, vocab);
}

TEST(ClassifySegmentsText, EqualSimilaritiesAreUniform) {
  // Every key at 45 degrees from the query.
  TextEmbeddingTable t = Table({{1, 1, 0}, {1, 0, 1}}, {1, -1, 0});
  ScoreRows p = ClassifySegmentsText({{1, 0, 0}}, t, ClassifierConfig{});
  ASSERT_EQ(p[0].size(), 3u);
  for (double v : p[0]) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
}

TEST(ClassifySegmentsText, SoftmaxOracle) {
  // cos(class) = 0.8, cos(no-object) = 0.2.
  TextEmbeddingTable t =
      Table({{0.8, 0.6}}, {0.2, std::sqrt(1.0 - 0.04)});
  ScoreRows p = ClassifySegmentsText({{3.0, 0.0}}, t, ClassifierConfig{1.0, true});
  EXPECT_NEAR(p[0][1], 0.6457, 1e-4);
  EXPECT_NEAR(p[0][0], 0.3543, 1e-4);
  auto ref = oracle::Softmax({0.2, 0.8});
  EXPECT_NEAR(p[0][0], ref[0], 1e-12);
}

TEST(ClassifySegmentsText, SharpensAtLowTemperature) {
  TextEmbeddingTable t = Table({{1.0, 0.0}, {0.9, std::sqrt(1 - 0.81)}}, {0, 1});
  ScoreRows p =
      ClassifySegmentsText({{1.0, 0.0}}, t, ClassifierConfig{0.01, false});
  ASSERT_EQ(p[0].size(), 2u);
  EXPECT_GT(p[0][0], 0.9999);
}

TEST(ClassifySegmentsText, SumsToOneAndIgnoresScale) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<double>> rows(5, std::vector<double>(6));
  for (auto& r : rows)
    for (double& v : r) v = n(rng);
  std::vector<double> t0(6);
  for (double& v : t0) v = n(rng);
  TextEmbeddingTable t = Table(rows, t0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> g(6);
    for (double& v : g) v = n(rng);
    std::vector<double> g2 = g;
    for (double& v : g2) v *= 17.5;
    ScoreRows a = ClassifySegmentsText({g}, t, ClassifierConfig{0.05, true});
    ScoreRows b = ClassifySegmentsText({g2}, t, ClassifierConfig{0.05, true});
    double s = 0.0;
    for (size_t c = 0; c < a[0].size(); ++c) {
      s += a[0][c];
      EXPECT_NEAR(a[0][c], b[0][c], 1e-12);
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(ClassifySegmentsText, Errors) {
  TextEmbeddingTable t = Table({{1, 0}}, {0, 1});
  EXPECT_ZS_ERROR(ClassifySegmentsText({{1, 0, 0}}, t, ClassifierConfig{}),
                  ErrorCode::kDimension);
  EXPECT_ZS_ERROR(ClassifySegmentsText({{1, 0}}, t, ClassifierConfig{0.0, true}),
                  ErrorCode::kConfig);
  EXPECT_ZS_ERROR(
      ClassifySegmentsText({{1, 0}}, t, ClassifierConfig{-1.0, true}),
      ErrorCode::kConfig);
}

TEST(ClassColumns, DropsNoObject) {
  ScoreRows s{{0.1, 0.2, 0.7}};
  EXPECT_EQ(ClassColumns(s, true)[0], (std::vector<double>{0.2, 0.7}));
  EXPECT_EQ(ClassColumns(s, false)[0], s[0]);
}

Image Gradient4x4() {
  Image im(4, 4, 1);
  for (int i = 0; i < 16; ++i) im.data[i] = i / 16.0;
  return im;
}

SoftMask TopLeft2x2() {
  SoftMask m(4, 4, 0.0);
  m.at(0, 0) = m.at(0, 1) = m.at(1, 0) = m.at(1, 1) = 0.9;
  return m;
}

TEST(MakeSubimage, FullMaskCropIsWholeImage) {
  Image im = Gradient4x4();
  Image out = MakeSubimage(im, SoftMask(4, 4, 1.0), SubimageMode::kCrop, 8);
  ASSERT_EQ(out.height, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      EXPECT_EQ(out.at(y, x, 0), im.at(y / 2, x / 2, 0));
}

TEST(MakeSubimage, MaskModeFillsOutside) {
  Image im = Gradient4x4();
  Image out = MakeSubimage(im, TopLeft2x2(), SubimageMode::kMask, 4, {0.25});
  int kept = 0, filled = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      if (y < 2 && x < 2) {
        EXPECT_EQ(out.at(y, x, 0), im.at(y, x, 0));
        ++kept;
      } else {
        EXPECT_EQ(out.at(y, x, 0), 0.25);
        ++filled;
      }
    }
  EXPECT_EQ(kept, 4);
  EXPECT_EQ(filled, 12);
}

TEST(MakeSubimage, CropAndMaskHasNoFill) {
  Image im = Gradient4x4();
  Image out =
      MakeSubimage(im, TopLeft2x2(), SubimageMode::kCropAndMask, 4, {0.99});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      EXPECT_NE(out.at(y, x, 0), 0.99);
      EXPECT_EQ(out.at(y, x, 0), im.at(y / 2, x / 2, 0));
    }
}

TEST(MakeSubimage, DefaultFillIsChannelMean) {
  Image im = Gradient4x4();
  Image out = MakeSubimage(im, TopLeft2x2(), SubimageMode::kMask, 4);
  EXPECT_NEAR(out.at(3, 3, 0), 7.5 / 16.0, 1e-12);
}

TEST(MakeSubimage, EmptyMaskInCropModes) {
  Image im = Gradient4x4();
  SoftMask empty(4, 4, 0.2);
  EXPECT_ZS_ERROR(MakeSubimage(im, empty, SubimageMode::kCrop, 8),
                  ErrorCode::kEmptySegment);
  EXPECT_ZS_ERROR(MakeSubimage(im, empty, SubimageMode::kCropAndMask, 8),
                  ErrorCode::kEmptySegment);
  EXPECT_NO_THROW(MakeSubimage(im, empty, SubimageMode::kMask, 8));
  EXPECT_ZS_ERROR(MakeSubimage(im, SoftMask(3, 4), SubimageMode::kMask, 8),
                  ErrorCode::kDimension);
}

// Returns a fixed embedding per call and counts the calls.
class FixedImageProvider : public ImageEmbeddingProvider {
 public:
  explicit FixedImageProvider(std::vector<double> v) : v_(std::move(v)) {}
  Embedding Embed(const Image&) const override {
    ++calls;
    return Embedding{v_, false};
  }
  int dim() const override { return static_cast<int>(v_.size()); }
  mutable std::atomic<int> calls{0};

 private:
  std::vector<double> v_;
};

TEST(ClassifySegmentsImage, ProviderReturningClassEmbeddingWins) {
  TextEmbeddingTable t = Table({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {1, 1, 1});
  FixedImageProvider p(t.embeddings[1].values);
  Image im(8, 8, 3, 0.5);
  ScoreRows s = ClassifySegmentsImage(im, {SoftMask(8, 8, 1.0)}, t, p,
                                      ClassifierConfig{0.01, false},
                                      InferenceConfig{});
  ASSERT_EQ(s[0].size(), 3u);
  EXPECT_GT(s[0][1], s[0][0]);
  EXPECT_GT(s[0][1], s[0][2]);
}

TEST(ClassifySegmentsImage, EquidistantIsHalfAndHalf) {
  TextEmbeddingTable t = Table({{1, 0}, {0, 1}}, {1, 1});
  FixedImageProvider p({1, 1});
  ScoreRows s = ClassifySegmentsImage(Image(8, 8, 3, 0.5), {SoftMask(8, 8, 1.0)},
                                      t, p, ClassifierConfig{0.01, false},
                                      InferenceConfig{});
  EXPECT_NEAR(s[0][0], 0.5, 1e-12);
  EXPECT_NEAR(s[0][1], 0.5, 1e-12);
}

TEST(ClassifySegmentsImage, EmptySegmentGetsUniformRow) {
  TextEmbeddingTable t = Table({{1, 0}, {0, 1}, {1, 1}}, {1, 1});
  FixedImageProvider p({1, 0});
  ScoreRows s = ClassifySegmentsImage(Image(8, 8, 3, 0.5),
                                      {SoftMask(8, 8, 0.0), SoftMask(8, 8, 1.0)},
                                      t, p, ClassifierConfig{0.01, false},
                                      InferenceConfig{});
  for (double v : s[0]) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(p.calls, 1);
}

TEST(ClassifySegmentsImage, ZeroNoiseOracleWorldIsAlwaysRight) {
  WorldConfig w = MakeDefaultWorld(0);
  OracleImageProvider provider(w);
  std::vector<std::string> names = w.ClassNames();
  TextEmbeddingTable t;
  t.class_names = names;
  for (const auto& c : w.classes) t.embeddings.push_back(Unit(c.attribute));
  t.no_object = t.embeddings[0];
  int correct = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    Sample s = GenScene(w, 500 + i);
    std::vector<SoftMask> masks;
    for (const auto& r : s.truth.regions) {
      SoftMask m(r.mask.height, r.mask.width);
      for (size_t p = 0; p < m.size(); ++p) m.values[p] = r.mask.bits[p];
      masks.push_back(m);
    }
    ScoreRows sc = ClassifySegmentsImage(s.image, masks, t, provider,
                                         ClassifierConfig{0.01, false},
                                         InferenceConfig{});
    for (size_t q = 0; q < masks.size(); ++q) {
      const int arg = static_cast<int>(
          std::max_element(sc[q].begin(), sc[q].end()) - sc[q].begin());
      correct += arg == s.truth.regions[q].class_id;
      ++total;
    }
  }
  EXPECT_EQ(correct, total);
}

TEST(FuseScores, LambdaDegeneracies) {
  SplitIndex sp = Split(2, 2);
  ScoreRows p{{0.1, 0.2, 0.3, 0.4}}, pi{{0.4, 0.3, 0.2, 0.1}};
  ScoreRows one = FuseScores(p, pi, sp, 1.0);
  EXPECT_EQ(one[0], (std::vector<double>{0.1, 0.2, 0.2, 0.1}));
  ScoreRows zero = FuseScores(p, pi, sp, 0.0);
  const double avg = (0.4 + 0.3) / 2.0;
  EXPECT_EQ(zero[0], (std::vector<double>{avg, avg, 0.3, 0.4}));
}

TEST(FuseScores, GeometricMeanFixture) {
  SplitIndex sp = Split(1, 1);
  ScoreRows f = FuseScores({{0.7, 0.3}}, {{0.4, 0.6}}, sp, 0.5);
  EXPECT_NEAR(f[0][0], 0.52915, 1e-5);
  EXPECT_NEAR(f[0][1], 0.42426, 1e-5);
  EXPECT_NEAR(f[0][0], std::sqrt(0.7 * 0.4), 1e-15);
  EXPECT_NEAR(f[0][1], std::sqrt(0.3 * 0.6), 1e-15);
}

TEST(FuseScores, UniformImageScoresKeepUnseenArgmax) {
  SplitIndex sp = Split(3, 4);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(7);
    for (double& v : p) v = u(rng);
    ScoreRows f = FuseScores({p}, {std::vector<double>(7, 1.0 / 7.0)}, sp, 0.5);
    auto best = [&](const std::vector<double>& v) {
      int b = 3;
      for (int c = 4; c < 7; ++c)
        if (v[c] > v[b]) b = c;
      return b;
    };
    EXPECT_EQ(best(f[0]), best(p));
  }
}

TEST(FuseScores, RejectsLambdaOutOfRange) {
  SplitIndex sp = Split(1, 1);
  EXPECT_ZS_ERROR(FuseScores({{0.5, 0.5}}, {{0.5, 0.5}}, sp, 1.5),
                  ErrorCode::kConfig);
}

TEST(SemanticMap, GammaZeroIsPlainArgmax) {
  SplitIndex sp = Split(2, 1);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SoftMask> masks(3, SoftMask(3, 3));
  ScoreRows sc(3, std::vector<double>(3));
  for (auto& m : masks)
    for (double& v : m.values) v = u(rng);
  for (auto& r : sc)
    for (double& v : r) v = u(rng);
  LabelMap l = SemanticMap(sc, masks, sp, 0.0);
  for (int p = 0; p < 9; ++p) {
    std::vector<double> agg(3, 0.0);
    for (int q = 0; q < 3; ++q)
      for (int c = 0; c < 3; ++c) agg[c] += sc[q][c] * masks[q].values[p];
    EXPECT_EQ(l.labels[p],
              std::max_element(agg.begin(), agg.end()) - agg.begin());
  }
}

TEST(SemanticMap, CalibrationFlipsSeenToUnseen) {
  SplitIndex sp = Split(1, 1);
  std::vector<SoftMask> m{SoftMask(1, 1, 1.0)};
  ScoreRows sc{{0.6, 0.5}};
  EXPECT_EQ(SemanticMap(sc, m, sp, 0.0).labels[0], 0);
  EXPECT_EQ(SemanticMap(sc, m, sp, 0.2).labels[0], 1);
}

TEST(SemanticMap, SingleQueryFullMask) {
  SplitIndex sp = Split(2, 2);
  LabelMap l = SemanticMap({{1.0, 0.0, 0.0, 0.0}}, {SoftMask(4, 5, 1.0)}, sp, 0.0);
  for (int v : l.labels) EXPECT_EQ(v, 0);
}

TEST(SemanticMap, TiesGoToLowestIndex) {
  SplitIndex sp = Split(2, 2);
  LabelMap l = SemanticMap({{0.25, 0.25, 0.25, 0.25}}, {SoftMask(1, 1, 1.0)},
                           sp, 0.0);
  EXPECT_EQ(l.labels[0], 0);
}

TEST(SemanticMap, Zs3ScoresOnlyUnseenAndIgnoresGamma) {
  SplitIndex sp = Split(2, 2, SplitMode::kZs3);
  ScoreRows sc{{0.9, 0.8, 0.1, 0.2}};
  std::vector<SoftMask> m{SoftMask(2, 2, 1.0)};
  for (double g : {0.0, 0.5, 1.0})
    for (int v : SemanticMap(sc, m, sp, g).labels) EXPECT_EQ(v, 3);
}

TEST(SemanticMap, CalibrationIsMonotoneInGamma) {
  SplitIndex sp = Split(3, 3);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SoftMask> masks(4, SoftMask(5, 5));
    ScoreRows sc(4, std::vector<double>(6));
    for (auto& m : masks)
      for (double& v : m.values) v = u(rng);
    for (auto& r : sc)
      for (double& v : r) v = u(rng) * u(rng);
    LabelMap prev = SemanticMap(sc, masks, sp, 0.0);
    for (int k = 1; k <= 10; ++k) {
      LabelMap next = SemanticMap(sc, masks, sp, k / 10.0);
      for (size_t p = 0; p < next.size(); ++p) {
        if (next.labels[p] == prev.labels[p]) continue;
        EXPECT_TRUE(sp.is_seen[prev.labels[p]]);
        EXPECT_TRUE(sp.is_unseen[next.labels[p]]);
      }
      prev = next;
    }
  }
}

TEST(PixelProbabilityMap, CalibratedArgmax) {
  SplitIndex sp = Split(1, 1);
  ad::Matrix probs(2, 2);
  probs.v = {0.6, 0.4, 0.3, 0.7};
  EXPECT_EQ(PixelProbabilityMap(probs, 1, 2, sp, 0.0).labels,
            (std::vector<int>{0, 1}));
  EXPECT_EQ(PixelProbabilityMap(probs, 1, 2, sp, 0.25).labels,
            (std::vector<int>{1, 1}));
}

TEST(InferenceConfig, Validation) {
  InferenceConfig c;
  EXPECT_EQ(c.subimage_resolution, 224);
  EXPECT_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.subimage_mode, SubimageMode::kCropAndMask);
  c.gamma = 1.5;
  EXPECT_ZS_ERROR(c.Validate(), ErrorCode::kConfig);
  c = InferenceConfig();
  c.subimage_resolution = 4;
  EXPECT_ZS_ERROR(c.Validate(), ErrorCode::kConfig);
  EXPECT_EQ(ParseVariant("full"), Variant::kFull);
  EXPECT_STREQ(SubimageModeName(ParseSubimageMode("crop_and_mask")),
               "crop_and_mask");
  EXPECT_ZS_ERROR(ParseVariant("both"), ErrorCode::kConfig);
}

struct TinyModelWorld {
  WorldConfig world;
  Segmenter model;
  TextEmbeddingTable table;
  SplitIndex split;

  TinyModelWorld() {
    world = MakeDefaultWorld(2);
    ModelConfig mc;
    mc.num_queries = 4;
    mc.decoder_dim = 16;
    mc.decoder_layers = 1;
    mc.pixel_feature_dim = 8;
    mc.encoder_channels = 4;
    model = Segmenter(mc);
    OracleTextProvider tp(world, 2);
    table = BuildTextTable(world.ClassNames(), SinglePromptTemplate(), tp, 2);
    split = ResolveSplit(world.split, world.ClassNames());
  }
};

TEST(RunInference, SegVariantNeverCallsImageProvider) {
  TinyModelWorld t;
  FixedImageProvider p(std::vector<double>(16, 1.0));
  Sample s = GenScene(t.world, 3);
  InferenceResult r = RunInference(t.model, s.image, t.table, t.split, &p,
                                   ClassifierConfig{}, InferenceConfig{});
  EXPECT_EQ(p.calls, 0);
  EXPECT_TRUE(r.image_scores.empty());
  EXPECT_TRUE(r.fused_scores.empty());
  EXPECT_EQ(r.labels.height, 64);
  InferenceResult r2 = RunInference(t.model, s.image, t.table, t.split, nullptr,
                                    ClassifierConfig{}, InferenceConfig{});
  EXPECT_EQ(r.labels.labels, r2.labels.labels);
}

TEST(RunInference, ImageVariantsUseProviderAndAreDeterministic) {
  TinyModelWorld t;
  OracleImageProvider oracle(t.world);
  Sample s = GenScene(t.world, 4);
  for (Variant v : {Variant::kImg, Variant::kFull}) {
    InferenceConfig ic;
    ic.variant = v;
    ic.subimage_resolution = 32;
    InferenceResult a = RunInference(t.model, s.image, t.table, t.split,
                                     &oracle, ClassifierConfig{}, ic);
    InferenceResult b = RunInference(t.model, s.image, t.table, t.split,
                                     &oracle, ClassifierConfig{}, ic);
    EXPECT_EQ(a.labels.labels, b.labels.labels);
    EXPECT_EQ(a.image_scores.size(), 4u);
    EXPECT_EQ(a.fused_scores.empty(), v == Variant::kImg);
    for (int l : a.labels.labels) EXPECT_LT(l, t.split.num_classes);
    EXPECT_ZS_ERROR(RunInference(t.model, s.image, t.table, t.split, nullptr,
                                 ClassifierConfig{}, ic),
                    ErrorCode::kConfig);
  }
}

TEST(RunInference, TextScoresIncludeNoObjectColumn) {
  TinyModelWorld t;
  Sample s = GenScene(t.world, 5);
  InferenceResult r = RunInference(t.model, s.image, t.table, t.split, nullptr,
                                   ClassifierConfig{}, InferenceConfig{});
  ASSERT_EQ(r.text_scores.size(), 4u);
  for (const auto& row : r.text_scores) {
    EXPECT_EQ(static_cast<int>(row.size()), t.split.num_classes + 1);
    double sum = 0.0;
    for (double v : row) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace zegseg
