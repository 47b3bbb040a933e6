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

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.h"
#include "test_util.h"
#include "zegseg/synth_world.h"
#include "zegseg/training.h"

namespace zegseg {
namespace {

using ad::Matrix;

Matrix Mat(int r, int c, std::vector<double> v) {
  Matrix m(r, c);
  m.v = std::move(v);
  return m;
}

std::vector<int> QueryPerSegment(const Assignment& a, int m) {
  std::vector<int> out(m, -1);
  for (auto [q, s] : a) out[s] = q;
  return out;
}

TEST(HungarianMatch, OneByOne) {
  Assignment a = HungarianMatch(Mat(1, 1, {3.5}));
  EXPECT_EQ(a, (Assignment{{0, 0}}));
}

TEST(HungarianMatch, ThreeByThreeFixture) {
  Matrix c = Mat(3, 3, {4, 1, 3, 2, 0, 5, 3, 2, 2});
  Assignment a = HungarianMatch(c);
  EXPECT_EQ(a, (Assignment{{0, 1}, {1, 0}, {2, 2}}));
  EXPECT_EQ(AssignmentCost(c, a), 5.0);
}

TEST(HungarianMatch, PermutationOfZeros) {
  std::mt19937_64 rng(2);
  for (int n = 1; n <= 6; ++n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix c(n, n, 1.0);
    for (int r = 0; r < n; ++r) c(r, perm[r]) = 0.0;
    Assignment a = HungarianMatch(c);
    ASSERT_EQ(static_cast<int>(a.size()), n);
    for (auto [q, s] : a) EXPECT_EQ(perm[q], s);
  }
}

TEST(HungarianMatch, RejectsMoreSegmentsThanQueries) {
  EXPECT_ZS_ERROR(HungarianMatch(Matrix(2, 3, 1.0)),
                  ErrorCode::kInfeasibleMatching);
}

TEST(HungarianMatch, NoSegments) {
  EXPECT_TRUE(HungarianMatch(Matrix(4, 0)).empty());
}

TEST(HungarianMatch, EqualColumnsUseLexicographicTieBreak) {
  // Two identical segments; queries 1 and 2 are equally good for both.
  Matrix c = Mat(3, 2, {5, 5, 1, 1, 1, 1});
  EXPECT_EQ(QueryPerSegment(HungarianMatch(c), 2), (std::vector<int>{1, 2}));
  Matrix all_equal(4, 3, 0.25);
  EXPECT_EQ(QueryPerSegment(HungarianMatch(all_equal), 3),
            (std::vector<int>{0, 1, 2}));
}

TEST(HungarianMatch, EqualsBruteForceOnRandomMatrices) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = dim(rng);
    const int n = std::max(m, dim(rng));
    Matrix c(n, m);
    // Small integer costs make ties frequent.
    const bool integer = trial % 2 == 0;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : c.v) v = integer ? static_cast<double>(rng() % 4) : u(rng);
    auto [best, seq] = oracle::BruteForceAssignment(c);
    Assignment a = HungarianMatch(c);
    ASSERT_EQ(static_cast<int>(a.size()), m);
    EXPECT_EQ(AssignmentCost(c, a), best) << "trial " << trial;
    EXPECT_EQ(QueryPerSegment(a, m), seq) << "trial " << trial;
  }
}

TEST(HungarianMatch, ScalingByTwoKeepsAssignment) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix c(5, 3);
    for (double& v : c.v) v = u(rng);
    Matrix d = c;
    for (double& v : d.v) v *= 2.0;
    EXPECT_EQ(HungarianMatch(c), HungarianMatch(d));
  }
}

TEST(DiceLoss, Fixtures) {
  std::vector<double> m{1, 0, 1, 1};
  std::vector<uint8_t> g{1, 0, 1, 1};
  EXPECT_NEAR(DiceLoss(m, g, {}, 1e-9), 0.0, 1e-6);
  std::vector<double> zero(4, 0.0);
  EXPECT_NEAR(DiceLoss(zero, g, {}, 1e-9), 1.0, 1e-6);
  std::vector<double> half(16, 0.0);
  std::vector<uint8_t> four(16, 0);
  for (int i : {1, 5, 9, 13}) half[i] = 0.5, four[i] = 1;
  EXPECT_NEAR(DiceLoss(half, four, {}, 1e-12), 1.0 / 3.0, 1e-9);
}

TEST(DiceLoss, IgnoresInvalidPixels) {
  std::vector<double> m{1, 1, 0.3};
  std::vector<uint8_t> g{1, 0, 1};
  std::vector<uint8_t> valid{1, 0, 0};
  EXPECT_NEAR(DiceLoss(m, g, valid, 1e-12), 0.0, 1e-9);
}

TEST(FocalLoss, Fixtures) {
  std::vector<double> m{1, 0, 1};
  std::vector<uint8_t> g{1, 0, 1};
  EXPECT_LE(FocalLoss(m, g, {}, 0.25, 2.0), 1e-5);
  std::vector<double> half{0.5};
  std::vector<uint8_t> one{1};
  EXPECT_NEAR(FocalLoss(half, one, {}, 0.25, 2.0), 0.25 * 0.25 * std::log(2.0),
              1e-12);
  EXPECT_NEAR(0.25 * 0.25 * std::log(2.0), 0.04332, 1e-5);
}

TEST(FocalLoss, GammaZeroIsHalfCrossEntropy) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> m(16);
    std::vector<uint8_t> g(16);
    double bce = 0.0;
    for (int i = 0; i < 16; ++i) {
      m[i] = u(rng);
      g[i] = rng() % 2;
      bce += g[i] ? -std::log(m[i]) : -std::log(1.0 - m[i]);
    }
    bce /= 16.0;
    EXPECT_NEAR(FocalLoss(m, g, {}, 0.5, 0.0), 0.5 * bce, 1e-12);
  }
}

TEST(ClassificationLoss, Fixtures) {
  std::vector<double> certain{0.0, 1.0};
  EXPECT_EQ(ClassificationLoss(certain, 1, false, 0.1), 0.0);
  std::vector<double> inv_e{1.0 / std::exp(1.0), 1.0 - 1.0 / std::exp(1.0)};
  EXPECT_NEAR(ClassificationLoss(inv_e, 0, false, 0.1), 1.0, 1e-12);
  std::vector<double> uniform(3, 1.0 / 3.0);
  EXPECT_NEAR(ClassificationLoss(uniform, 2, false, 0.1), 1.09861, 1e-5);
  EXPECT_NEAR(ClassificationLoss(uniform, 0, true, 0.1), 0.109861, 1e-6);
  EXPECT_ZS_ERROR(ClassificationLoss(uniform, 3, false, 0.1),
                  ErrorCode::kConfig);
}

TEST(LossRanges, PropertySweep) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> m(25);
    std::vector<uint8_t> g(25);
    for (int i = 0; i < 25; ++i) {
      m[i] = u(rng);
      g[i] = rng() % 3 == 0;
    }
    const double d = DiceLoss(m, g, {}, 1.0);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_GE(FocalLoss(m, g, {}, 0.25, 2.0), 0.0);
    std::vector<double> p{u(rng), u(rng), u(rng)};
    const double s = p[0] + p[1] + p[2];
    for (double& v : p) v /= s;
    EXPECT_GE(ClassificationLoss(p, static_cast<int>(rng() % 3), false, 0.1),
              0.0);
  }
}

TEST(MatchingCost, PerfectPrediction) {
  std::vector<double> m{1, 0, 0, 1};
  std::vector<uint8_t> g{1, 0, 0, 1};
  LossWeights w;
  const double cost = MatchingCost(1.0, m, g, {}, w);
  EXPECT_NEAR(cost, -1.0, 1e-4);
  EXPECT_GE(cost, -1.0);
}

TEST(MatchingCost, UniformHalfMaskOracle) {
  std::vector<double> m(16, 0.5);
  std::vector<uint8_t> g(16, 0);
  for (int i = 0; i < 8; ++i) g[i] = 1;
  LossWeights w;
  // dice: 1 - (2*4 + 1) / (8 + 8 + 1); focal: mean of a_t * 0.25 * ln 2.
  const double dice = 1.0 - 9.0 / 17.0;
  const double focal = 0.5 * (0.25 + 0.75) * 0.25 * std::log(2.0);
  EXPECT_NEAR(MatchingCost(0.5, m, g, {}, w), -0.5 + dice + 20.0 * focal,
              1e-12);
}

// A set prediction built directly from logits.
struct SetFixture {
  Matrix class_logits;
  Matrix mask_logits;
  SetTargets targets;
};

SetFixture RandomSet(uint64_t seed, int n, int k, int pixels, int segments) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.5);
  SetFixture f{Matrix(n, k + 1), Matrix(n, pixels), {}};
  for (double& v : f.class_logits.v) v = nd(rng);
  for (double& v : f.mask_logits.v) v = nd(rng);
  std::vector<int> owner(pixels);
  for (int& o : owner) o = static_cast<int>(rng() % segments);
  for (int s = 0; s < segments; ++s) {
    f.targets.columns.push_back(1 + static_cast<int>(rng() % k));
    std::vector<uint8_t> mask(pixels);
    for (int p = 0; p < pixels; ++p) mask[p] = owner[p] == s;
    f.targets.masks.push_back(mask);
  }
  return f;
}

double SetLossValue(const SetFixture& f, const LossWeights& w,
                    const Assignment* fixed = nullptr) {
  ad::Graph g(false);
  return SetPredictionLoss(g.Constant(f.class_logits),
                           g.Constant(f.mask_logits), f.targets, w, fixed)
      .loss.value()
      .v[0];
}

TEST(SetPredictionLoss, PerfectPredictionIsAtTheFloor) {
  const int n = 3, k = 2, pixels = 6;
  SetFixture f{Matrix(n, k + 1, -40.0), Matrix(n, pixels, -40.0), {}};
  f.targets.columns = {2, 1};
  f.targets.masks = {{1, 1, 1, 0, 0, 0}, {0, 0, 0, 1, 1, 1}};
  // Query 0 -> segment 0, query 2 -> segment 1, query 1 -> no-object.
  f.class_logits(0, 2) = 40.0;
  f.class_logits(2, 1) = 40.0;
  f.class_logits(1, 0) = 40.0;
  for (int p = 0; p < 3; ++p) f.mask_logits(0, p) = 40.0;
  for (int p = 3; p < 6; ++p) f.mask_logits(2, p) = 40.0;
  LossWeights w;
  w.dice_eps = 1e-9;
  EXPECT_LT(SetLossValue(f, w), 1e-4);
}

TEST(SetPredictionLoss, InvariantToQueryOrder) {
  LossWeights w;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    SetFixture f = RandomSet(seed, 5, 3, 12, 3);
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(seed + 100));
    SetFixture g = f;
    for (int q = 0; q < 5; ++q) {
      std::copy(f.class_logits.row(perm[q]),
                f.class_logits.row(perm[q]) + f.class_logits.cols,
                g.class_logits.row(q));
      std::copy(f.mask_logits.row(perm[q]),
                f.mask_logits.row(perm[q]) + f.mask_logits.cols,
                g.mask_logits.row(q));
    }
    EXPECT_NEAR(SetLossValue(f, w), SetLossValue(g, w), 1e-12);
  }
}

TEST(SetPredictionLoss, GradientsMatchFiniteDifferences) {
  LossWeights w;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SetFixture f = RandomSet(seed, 4, 3, 9, 2);
    ad::Graph g;
    ad::Var cl = g.Leaf(f.class_logits), ml = g.Leaf(f.mask_logits);
    SetLoss sl = SetPredictionLoss(cl, ml, f.targets, w);
    g.Backward(sl.loss);
    for (int which = 0; which < 2; ++which) {
      Matrix& m = which ? f.mask_logits : f.class_logits;
      const Matrix* grad = g.grad_if_any(which ? ml : cl);
      for (size_t i = 0; i < m.size(); ++i) {
        const double keep = m.v[i], h = 1e-6;
        m.v[i] = keep + h;
        const double up = SetLossValue(f, w, &sl.assignment);
        m.v[i] = keep - h;
        const double down = SetLossValue(f, w, &sl.assignment);
        m.v[i] = keep;
        const double numeric = (up - down) / (2 * h);
        EXPECT_NEAR(grad->v[i], numeric,
                    1e-5 * std::max(1.0, std::abs(numeric)));
      }
    }
  }
}

TEST(SetPredictionLoss, RejectsOutOfRangeColumns) {
  SetFixture f = RandomSet(1, 3, 2, 4, 1);
  f.targets.columns[0] = 3;
  EXPECT_ZS_ERROR(SetLossValue(f, LossWeights()), ErrorCode::kConfig);
}

// Small world shared by the model-level tests.
struct SmallWorld {
  WorldConfig world;
  Dataset data;
  TextEmbeddingTable seen;
  std::vector<int> vocab_to_column;

  explicit SmallWorld(int images, int size = 16) {
    world = MakeDefaultWorld(1);
    world.height = world.width = size;
    world.min_object_size = size / 4;
    world.max_object_size = size / 2;
    world.max_objects = 2;
    world.min_gap = 1;
    data = GenDataset(world, 0, images, world.split.seen);
    OracleTextProvider tp(world, 1);
    seen = BuildTextTable(world.split.seen, SinglePromptTemplate(), tp, 1);
    vocab_to_column.assign(world.classes.size(), -1);
    for (size_t i = 0; i < world.split.seen.size(); ++i)
      vocab_to_column[world.IndexOf(world.split.seen[i])] =
          static_cast<int>(i) + 1;
  }
};

TrainConfig TinyConfig() {
  TrainConfig tc;
  tc.model.num_queries = 4;
  tc.model.decoder_dim = 16;
  tc.model.decoder_layers = 1;
  tc.model.pixel_feature_dim = 8;
  tc.model.encoder_channels = 4;
  tc.model.ffn_dim = 16;
  tc.model.mask_hidden_dim = 8;
  tc.model.temperature = 0.1;
  tc.model.seed = 5;
  tc.seed = 5;
  return tc;
}

TEST(ComputeBatchLoss, SampledGradientsMatchFiniteDifferences) {
  SmallWorld sw(2);
  for (ModelKind kind : {ModelKind::kSegment, ModelKind::kPixelBaseline}) {
    for (bool deep : {false, true}) {
      if (kind == ModelKind::kPixelBaseline && deep) continue;
      TrainConfig tc = TinyConfig();
      tc.model.kind = kind;
      tc.model.decoder_layers = 2;
      tc.deep_supervision = deep;
      Segmenter m(tc.model);
      std::vector<const Sample*> batch{&sw.data.samples[0],
                                       &sw.data.samples[1]};
      BatchLoss bl = ComputeBatchLoss(m, batch, sw.seen, sw.vocab_to_column, tc);
      std::mt19937_64 rng(3);
      for (size_t p = 0; p < m.params().tensors.size(); ++p) {
        const size_t size = m.params().tensors[p].size();
        for (int probe = 0; probe < 2; ++probe) {
          const size_t i = rng() % size;
          Segmenter plus = m, minus = m;
          plus.mutable_params().tensors[p].v[i] += 1e-5;
          minus.mutable_params().tensors[p].v[i] -= 1e-5;
          const double lp = ComputeBatchLoss(plus, batch, sw.seen,
                                             sw.vocab_to_column, tc,
                                             &bl.assignments).loss;
          const double lm = ComputeBatchLoss(minus, batch, sw.seen,
                                             sw.vocab_to_column, tc,
                                             &bl.assignments).loss;
          const double numeric = (lp - lm) / 2e-5;
          const double analytic = bl.grads[p].v[i];
          const double rel =
              std::abs(numeric - analytic) /
              std::max({std::abs(numeric), std::abs(analytic), 1e-5});
          EXPECT_LT(rel, 1e-4) << m.params().names[p] << "[" << i << "]";
        }
      }
    }
  }
}

TEST(ComputeBatchLoss, NoObjectEmbeddingReceivesGradient) {
  SmallWorld sw(1);
  TrainConfig tc = TinyConfig();
  Segmenter m(tc.model);
  std::vector<const Sample*> batch{&sw.data.samples[0]};
  BatchLoss bl = ComputeBatchLoss(m, batch, sw.seen, sw.vocab_to_column, tc);
  const int idx = m.params().IndexOf("no_object");
  ASSERT_GE(idx, 0);
  double norm = 0.0;
  for (double v : bl.grads[idx].v) norm += v * v;
  EXPECT_GT(norm, 0.0);
}

TEST(MakeSetTargets, RejectsUnseenClasses) {
  SmallWorld sw(1);
  Sample s = sw.data.samples[0];
  s.truth.regions[0].class_id = sw.world.IndexOf(sw.world.split.unseen[0]);
  EXPECT_ZS_ERROR(MakeSetTargets(s, sw.vocab_to_column), ErrorCode::kConfig);
}

TEST(Train, ZeroStepsReturnsInitialisation) {
  SmallWorld sw(2);
  TrainConfig tc = TinyConfig();
  tc.optimizer.steps = 0;
  TrainResult r = Train(sw.data, sw.seen, tc);
  EXPECT_TRUE(r.loss_history.empty());
  Segmenter init(tc.model);
  for (size_t i = 0; i < init.params().tensors.size(); ++i)
    EXPECT_EQ(r.model.params().tensors[i].v, init.params().tensors[i].v);
}

TEST(Train, SameSeedIsBitwiseReproducible) {
  SmallWorld sw(4);
  TrainConfig tc = TinyConfig();
  tc.optimizer.steps = 5;
  TrainResult a = Train(sw.data, sw.seen, tc);
  TrainResult b = Train(sw.data, sw.seen, tc);
  EXPECT_EQ(a.loss_history, b.loss_history);
  for (size_t i = 0; i < a.model.params().tensors.size(); ++i)
    EXPECT_EQ(a.model.params().tensors[i].v, b.model.params().tensors[i].v);
  tc.seed = 6;
  TrainResult c = Train(sw.data, sw.seen, tc);
  EXPECT_NE(a.loss_history, c.loss_history);
}

TEST(Train, RejectsUnseenClassInData) {
  SmallWorld sw(2);
  Dataset bad = sw.data;
  bad.samples[0].truth.regions[0].class_id =
      sw.world.IndexOf(sw.world.split.unseen[0]);
  TrainConfig tc = TinyConfig();
  tc.optimizer.steps = 1;
  EXPECT_ZS_ERROR(Train(bad, sw.seen, tc), ErrorCode::kConfig);
}

TEST(Train, TwoHundredStepsHalveTheSmoothedLoss) {
  WorldConfig w = MakeDefaultWorld(0);
  Dataset data = GenDataset(w, 0, 10, w.split.seen);
  OracleTextProvider tp(w, 0);
  TextEmbeddingTable seen =
      BuildTextTable(w.split.seen, SinglePromptTemplate(), tp, 0);
  TrainConfig tc;  // default settings, 200 steps
  ASSERT_EQ(tc.optimizer.steps, 200);
  TrainResult r = Train(data, seen, tc);
  ASSERT_EQ(r.loss_history.size(), 200u);
  EXPECT_LT(SmoothedLoss(r.loss_history, false, 20),
            0.5 * SmoothedLoss(r.loss_history, true, 20));
}

TEST(SmoothedLoss, Windows) {
  std::vector<double> h{4, 2, 6, 8};
  EXPECT_EQ(SmoothedLoss(h, true, 2), 3.0);
  EXPECT_EQ(SmoothedLoss(h, false, 2), 7.0);
  EXPECT_EQ(SmoothedLoss(h, true, 10), 5.0);
  EXPECT_EQ(SmoothedLoss({}, true, 3), 0.0);
}

TEST(OptimizerConfig, DefaultsAndValidation) {
  OptimizerConfig o;
  EXPECT_EQ(o.learning_rate, 1e-4);
  EXPECT_EQ(o.weight_decay, 1e-4);
  EXPECT_EQ(o.beta1, 0.9);
  EXPECT_EQ(o.beta2, 0.999);
  o.batch_size = 0;
  EXPECT_ZS_ERROR(o.Validate(), ErrorCode::kConfig);
  LossWeights lw;
  EXPECT_EQ(lw.focal, 20.0);
  EXPECT_EQ(lw.no_object, 0.1);
  lw.dice_eps = 0.0;
  EXPECT_ZS_ERROR(lw.Validate(), ErrorCode::kConfig);
}

}  // namespace
}  // namespace zegseg
