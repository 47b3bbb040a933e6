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
#include <filesystem>
#include <limits>
#include <random>

#include "test_util.h"
#include "zegseg/commands.h"
#include "zegseg/config.h"
#include "zegseg/io.h"

namespace zegseg {
namespace {

namespace fs = std::filesystem;

Image RandomImage(std::mt19937_64& rng, int h, int w, int c) {
  Image im(h, w, c);
  for (double& v : im.data) v = static_cast<double>(rng() % 256) / 255.0;
  return im;
}

ModelConfig SmallModel() {
  ModelConfig mc;
  mc.num_queries = 4;
  mc.decoder_dim = 16;
  mc.decoder_layers = 1;
  mc.pixel_feature_dim = 8;
  mc.encoder_channels = 4;
  mc.seed = 3;
  return mc;
}

TEST(ImageIo, RoundTripBothFormats) {
  std::mt19937_64 rng(1);
  for (int c : {1, 3}) {
    Image im = RandomImage(rng, 5, 7, c);
    const std::string bytes = EncodeImage(im);
    Image back = DecodeImage(bytes);
    EXPECT_EQ(back.data, im.data);
    EXPECT_EQ(back.channels, c);
    EXPECT_EQ(EncodeImage(back), bytes);
  }
  EXPECT_ZS_ERROR(DecodeImage("P6\n2 2\n255\nabc"), ErrorCode::kParse);
  EXPECT_ZS_ERROR(DecodeImage("XX"), ErrorCode::kParse);
}

TEST(LabelMapIo, RoundTripWithIgnore) {
  LabelMap l(3, 4, 2);
  l.labels[5] = kIgnore;
  l.labels[0] = 0;
  const std::string bytes = EncodeLabelMap(l);
  LabelMap back = DecodeLabelMap(bytes);
  EXPECT_EQ(back.labels, l.labels);
  EXPECT_EQ(EncodeLabelMap(back), bytes);
}

TEST(SoftMaskIo, RoundTripIsStableAfterQuantization) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SoftMask m(6, 5);
  for (double& v : m.values) v = u(rng);
  const std::string bytes = EncodeSoftMask(m);
  SoftMask back = DecodeSoftMask(bytes);
  for (size_t i = 0; i < m.size(); ++i)
    EXPECT_NEAR(back.values[i], m.values[i], 0.5 / 65535.0 + 1e-12);
  EXPECT_EQ(EncodeSoftMask(back), bytes);
}

TEST(FormatDouble, ShortestRoundTrip) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = n(rng);
    EXPECT_EQ(ParseDouble(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.5), "0.5");
  EXPECT_ZS_ERROR(FormatDouble(std::numeric_limits<double>::quiet_NaN()),
                  ErrorCode::kNumeric);
}

TEST(EmbeddingTsv, RoundTripAndTableLookup) {
  std::vector<std::pair<std::string, Embedding>> entries{
      {"cat", Embedding{{0.6, 0.8}, false}},
      {"dog", Embedding{{1.0 / 3.0, -0.25}, false}}};
  const std::string text = EncodeEmbeddingTsv(entries);
  EXPECT_EQ(text.rfind("#dim 2\n", 0), 0u);
  auto back = DecodeEmbeddingTsv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].first, "dog");
  EXPECT_EQ(back[1].second.values, entries[1].second.values);
  EXPECT_EQ(EncodeEmbeddingTsv(back), text);
  TextEmbeddingTable t = TableFromEntries(back, {"dog"});
  EXPECT_EQ(t.class_names, std::vector<std::string>{"dog"});
  EXPECT_ZS_ERROR(TableFromEntries(back, {"cow"}), ErrorCode::kConfig);
  EXPECT_ZS_ERROR(DecodeEmbeddingTsv("#dim 2\ncat\t1 2 3\n"), ErrorCode::kParse);
}

TEST(LossCsv, RoundTrip) {
  std::vector<double> l{3.25, 1.0 / 7.0, 0.001};
  const std::string text = EncodeLossCsv(l);
  EXPECT_EQ(text.rfind("step,loss\n1,3.25\n", 0), 0u);
  EXPECT_EQ(DecodeLossCsv(text), l);
  EXPECT_ZS_ERROR(DecodeLossCsv("step,loss\n2,1\n"), ErrorCode::kParse);
}

TEST(Checkpoint, ReloadGivesBitwiseIdenticalPredictions) {
  for (ModelKind kind : {ModelKind::kSegment, ModelKind::kPixelBaseline}) {
    ModelConfig mc = SmallModel();
    mc.kind = kind;
    Segmenter model(mc);
    const std::string bytes = EncodeCheckpoint(model);
    Segmenter back = DecodeCheckpoint(bytes);
    EXPECT_EQ(EncodeCheckpoint(back), bytes);
    ASSERT_EQ(back.params().names, model.params().names);
    for (size_t i = 0; i < model.params().tensors.size(); ++i)
      EXPECT_EQ(back.params().tensors[i].v, model.params().tensors[i].v);
    if (kind != ModelKind::kSegment) continue;
    std::mt19937_64 rng(4);
    Image im = RandomImage(rng, 32, 32, 3);
    auto a = model.Predict(im), b = back.Predict(im);
    ASSERT_EQ(a.size(), b.size());
    for (size_t q = 0; q < a.size(); ++q) {
      EXPECT_EQ(a[q].semantic_embedding, b[q].semantic_embedding);
      EXPECT_EQ(a[q].soft_mask.values, b[q].soft_mask.values);
    }
  }
}

TEST(Checkpoint, CorruptionIsAParseError) {
  const std::string bytes = EncodeCheckpoint(Segmenter(SmallModel()));
  EXPECT_ZS_ERROR(DecodeCheckpoint(bytes.substr(0, bytes.size() - 3)),
                  ErrorCode::kParse);
  EXPECT_ZS_ERROR(DecodeCheckpoint("NOPE" + bytes.substr(4)), ErrorCode::kParse);
  EXPECT_ZS_ERROR(DecodeCheckpoint(bytes + "x"), ErrorCode::kParse);
}

TEST(Files, AtomicWriteAndMissingFile) {
  const std::string dir = testing::ScratchDir("files");
  const std::string path = dir + "/a.bin";
  WriteFileAtomic(path, "hello");
  WriteFileAtomic(path, "bye");
  EXPECT_EQ(ReadFile(path), "bye");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) entries += !e.is_directory();
  EXPECT_EQ(entries, 1);
  EXPECT_ZS_ERROR(ReadFile(dir + "/missing"), ErrorCode::kIo);
  EXPECT_ZS_ERROR(ReadCheckpoint(dir + "/missing.ckpt"), ErrorCode::kIo);
}

TEST(RunConfig, DefaultsRoundTrip) {
  RunConfig cfg;
  const Json j = ToJson(cfg);
  const std::string text = DumpJson(j);
  EXPECT_EQ(DumpJson(ToJson(RunConfigFromJson(j))), text);
  RunConfig empty = RunConfigFromJson(Json::object());
  EXPECT_EQ(DumpJson(ToJson(empty)), text);
  EXPECT_EQ(cfg.infer.classifier.temperature, 0.01);
  EXPECT_EQ(cfg.infer.inference.subimage_resolution, 224);
}

TEST(RunConfig, PartialOverridesKeepOtherDefaults) {
  Json j = ParseJson(R"({"seed": 7, "train": {"optimizer": {"steps": 12}}})",
                     "test");
  RunConfig cfg = RunConfigFromJson(j);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.train.optimizer.steps, 12);
  EXPECT_EQ(cfg.MakeTrainConfig().model.seed, 7u);
  EXPECT_EQ(cfg.train.optimizer.learning_rate,
            RunConfig().train.optimizer.learning_rate);
}

TEST(RunConfig, RejectsUnknownKeysAndBadTypes) {
  EXPECT_ZS_ERROR(RunConfigFromJson(ParseJson(R"({"sed": 1})", "t")),
                  ErrorCode::kConfig);
  EXPECT_ZS_ERROR(
      RunConfigFromJson(ParseJson(R"({"infer": {"gama": 0.1}})", "t")),
      ErrorCode::kConfig);
  EXPECT_ZS_ERROR(RunConfigFromJson(ParseJson(R"({"seed": "x"})", "t")),
                  ErrorCode::kConfig);
  EXPECT_ZS_ERROR(
      RunConfigFromJson(ParseJson(R"({"infer": {"gamma": 2.0}})", "t")),
      ErrorCode::kConfig);
  EXPECT_ZS_ERROR(ParseJson("{", "t"), ErrorCode::kParse);
}

TEST(Manifest, GeneratedDataLoadsBackExactly) {
  const std::string dir = testing::ScratchDir("data");
  RunConfig cfg;
  cfg.seed = 2;
  cfg.data.num_images = 3;
  Manifest m = GenerateData(cfg, dir);
  EXPECT_EQ(m.samples.size(), 3u);
  Manifest loaded = LoadManifest(dir + "/manifest.json");
  EXPECT_EQ(loaded.vocabulary, m.vocabulary);
  EXPECT_EQ(loaded.split.seen, m.split.seen);
  Dataset d = LoadDataset(loaded);
  const WorldConfig w = cfg.world.Build(cfg.seed);
  const SplitIndex split = ResolveSplit(w.split, w.ClassNames());
  for (int i = 0; i < 3; ++i) {
    Sample s = GenScene(w, i, w.split.seen);
    EXPECT_EQ(d.samples[i].image.data, s.image.data);
    LabelMap a = LabelMapFromRegions(d.samples[i].truth, w.height, w.width);
    LabelMap b = LabelMapFromRegions(s.truth, w.height, w.width);
    EXPECT_EQ(a.labels, b.labels);
    for (const auto& r : d.samples[i].truth.regions)
      EXPECT_TRUE(split.is_seen[r.class_id]);
  }
  const std::string again = testing::ScratchDir("again");
  GenerateData(cfg, again);
  for (const char* f : {"manifest.json", "embeddings.tsv", "split.json"})
    EXPECT_EQ(ReadFile(dir + "/" + f), ReadFile(again + "/" + f)) << f;
}

TEST(Manifest, MissingFilesAndBadLabels) {
  const std::string dir = testing::ScratchDir("bad");
  RunConfig cfg;
  cfg.data.num_images = 1;
  Manifest m = GenerateData(cfg, dir);
  fs::remove(m.Resolve(m.samples[0].image));
  EXPECT_ZS_ERROR(LoadManifest(dir + "/manifest.json"), ErrorCode::kIo);
  EXPECT_ZS_ERROR(LoadManifest(dir + "/nothing.json"), ErrorCode::kIo);

  const std::string dir2 = testing::ScratchDir("bad2");
  Manifest m2 = GenerateData(cfg, dir2);
  LabelMap l = ReadLabelMap(m2.Resolve(m2.samples[0].labels));
  l.labels[0] = 200;
  WriteLabelMap(m2.Resolve(m2.samples[0].labels), l);
  EXPECT_ZS_ERROR(LoadDataset(LoadManifest(dir2 + "/manifest.json")),
                  ErrorCode::kConfig);
}

TEST(TrainCommand, CheckpointReproducesReportedLoss) {
  const std::string dir = testing::ScratchDir("train");
  RunConfig cfg;
  cfg.seed = 4;
  cfg.world.height = cfg.world.width = 32;
  cfg.world.min_object_size = 8;
  cfg.world.max_object_size = 12;
  cfg.data.num_images = 4;
  cfg.model = SmallModel();
  cfg.train.optimizer.steps = 6;
  Manifest m = GenerateData(cfg, dir);
  Json summary = TrainCommand(cfg, dir + "/manifest.json", dir + "/m.ckpt",
                              dir + "/loss.csv");
  EXPECT_EQ(DecodeLossCsv(ReadFile(dir + "/loss.csv")).size(), 6u);
  const Segmenter back = ReadCheckpoint(dir + "/m.ckpt");
  const Dataset data = LoadDataset(m);
  const TextEmbeddingTable seen =
      TableFromEntries(ReadEmbeddingTsv(m.Resolve(m.embeddings)), m.split.seen);
  EXPECT_EQ(DatasetLoss(back, data, seen, cfg.MakeTrainConfig()),
            summary["checkpoint_loss"].get<double>());
}

}  // namespace
}  // namespace zegseg
