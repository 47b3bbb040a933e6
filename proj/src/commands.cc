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

#include "zegseg/commands.h"

#include <cstdio>
#include <filesystem>
#include <memory>
#include <set>

#include "zegseg/error.h"
#include "zegseg/inference.h"
#include "zegseg/io.h"
#include "zegseg/synth_world.h"
#include "zegseg/training.h"

namespace zegseg {
namespace fs = std::filesystem;
namespace {

std::string IndexName(uint64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06llu", static_cast<unsigned long long>(i));
  return buf;
}

std::vector<std::pair<std::string, Embedding>> LoadEntries(
    const Manifest& m, const std::string& override_path) {
  std::string path = override_path;
  if (path.empty()) {
    ZS_CHECK(!m.embeddings.empty(), ErrorCode::kConfig,
             "no embeddings given and the manifest names none");
    path = m.Resolve(m.embeddings);
  }
  return ReadEmbeddingTsv(path);
}

// Table over the vocabulary. Missing unseen entries are reported as such.
TextEmbeddingTable VocabularyTable(
    const std::vector<std::pair<std::string, Embedding>>& entries,
    const Manifest& m) {
  std::set<std::string> have;
  for (const auto& e : entries) have.insert(e.first);
  for (const auto& name : m.split.unseen)
    ZS_CHECK(have.count(name), ErrorCode::kConfig,
             "missing embedding for unseen class '" + name + "'");
  return TableFromEntries(entries, m.vocabulary);
}

bool IsManifestPath(const std::string& input) {
  return fs::path(input).extension() == ".json";
}

}  // namespace

Manifest GenerateData(const RunConfig& cfg, const std::string& out_dir) {
  cfg.Validate();
  const WorldConfig world = cfg.world.Build(cfg.seed);
  Manifest m;
  m.root = out_dir;
  m.vocabulary = world.ClassNames();
  m.split = world.split;
  m.embeddings = "embeddings.tsv";
  m.has_world = true;
  m.world_seed = cfg.seed;
  m.world = cfg.world;

  const std::vector<std::string> permitted =
      cfg.data.classes == "seen" ? world.split.seen : std::vector<std::string>{};
  for (int i = 0; i < cfg.data.num_images; ++i) {
    const uint64_t index = cfg.data.first_index + static_cast<uint64_t>(i);
    const Sample s = GenScene(world, index, permitted);
    ManifestEntry entry{"images/" + IndexName(index) + ".ppm",
                        "labels/" + IndexName(index) + ".pgm"};
    WriteImage(m.Resolve(entry.image), s.image);
    WriteLabelMap(m.Resolve(entry.labels),
                  LabelMapFromRegions(s.truth, s.image.height, s.image.width));
    m.samples.push_back(std::move(entry));
  }

  const OracleTextProvider text(world, cfg.seed);
  const TextEmbeddingTable table =
      BuildTextTable(m.vocabulary, cfg.Templates(), text, cfg.seed);
  std::vector<std::pair<std::string, Embedding>> entries;
  for (int c = 0; c < table.size(); ++c)
    entries.emplace_back(table.class_names[c], table.embeddings[c]);
  WriteEmbeddingTsv(m.Resolve(m.embeddings), entries);

  Json split{{"seen", m.split.seen}, {"unseen", m.split.unseen}};
  WriteFileAtomic(m.Resolve("split.json"), DumpJson(split));
  WriteFileAtomic(m.Resolve("config.json"), DumpJson(ToJson(cfg)));
  WriteFileAtomic(m.Resolve("manifest.json"), DumpJson(ToJson(m)));
  return m;
}

Json TrainCommand(const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& checkpoint_path,
                  const std::string& loss_csv_path,
                  const std::string& embeddings) {
  cfg.Validate();
  const Manifest m = LoadManifest(manifest_path);
  const Dataset data = LoadDataset(m);
  // Refuse before any work when an unseen (or unknown) class is labelled.
  const std::set<std::string> seen(m.split.seen.begin(), m.split.seen.end());
  for (size_t i = 0; i < data.samples.size(); ++i)
    for (const auto& region : data.samples[i].truth.regions) {
      const std::string& name = m.vocabulary[region.class_id];
      ZS_CHECK(seen.count(name), ErrorCode::kConfig,
               m.samples[i].labels + ": class '" + name +
                   "' is not a seen class; training uses seen classes only");
    }
  const auto entries = LoadEntries(m, embeddings);
  const TextEmbeddingTable seen_table = TableFromEntries(entries, m.split.seen);

  const TrainResult r = Train(data, seen_table, cfg.MakeTrainConfig());
  WriteCheckpoint(checkpoint_path, r.model);
  WriteFileAtomic(loss_csv_path, EncodeLossCsv(r.loss_history));
  Json summary{{"checkpoint", checkpoint_path},
               {"loss_csv", loss_csv_path},
               {"steps", r.loss_history.size()}};
  if (!r.loss_history.empty()) {
    const int w = std::min<int>(20, static_cast<int>(r.loss_history.size()));
    summary["initial_loss"] = SmoothedLoss(r.loss_history, true, w);
    summary["final_loss"] = SmoothedLoss(r.loss_history, false, w);
    summary["checkpoint_loss"] =
        DatasetLoss(r.model, data, seen_table, cfg.MakeTrainConfig());
  }
  return summary;
}

Json InferCommand(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& input, const std::string& out_dir,
                  const std::string& embeddings) {
  cfg.Validate();
  const Segmenter model = ReadCheckpoint(checkpoint_path);
  Manifest m;
  // Image path to read, image name recorded in the sidecar, output name.
  // The recorded name avoids absolute paths so outputs do not depend on the
  // working directory.
  struct Job {
    std::string image, recorded, output;
  };
  std::vector<Job> jobs;
  if (IsManifestPath(input)) {
    m = LoadManifest(input);
    for (const auto& s : m.samples)
      jobs.push_back({m.Resolve(s.image), s.image,
                      fs::path(s.labels).filename().string()});
  } else {
    // A single image: vocabulary, split and world come from the manifest
    // next to the embeddings (or the default embeddings path).
    ZS_CHECK(!embeddings.empty(), ErrorCode::kConfig,
             "single-image inference needs --embeddings next to a manifest");
    const fs::path manifest_path =
        fs::path(embeddings).parent_path() / "manifest.json";
    m = LoadManifest(manifest_path.string());
    jobs.push_back({input, fs::path(input).filename().string(),
                    fs::path(input).stem().string() + ".pgm"});
  }
  const auto entries = LoadEntries(m, embeddings);
  const TextEmbeddingTable table = VocabularyTable(entries, m);
  ClassSplit split = m.split;
  split.mode = cfg.infer.mode;
  const SplitIndex index = ResolveSplit(split, m.vocabulary);

  const InferenceConfig& ic = cfg.infer.inference;
  const bool needs_images = model.config().kind == ModelKind::kSegment &&
                            ic.variant != Variant::kSeg;
  WorldConfig world;
  std::unique_ptr<OracleImageProvider> images;
  if (needs_images) {
    ZS_CHECK(m.has_world, ErrorCode::kConfig,
             "variant '" + std::string(VariantName(ic.variant)) +
                 "' needs an image-embedding source (a synthetic manifest)");
    world = m.world.Build(m.world_seed);
    images = std::make_unique<OracleImageProvider>(world, m.world_seed);
  }

  Json outputs = Json::array();
  for (const auto& [image_path, recorded, out_name] : jobs) {
    const Image image = ReadImage(image_path);
    const std::string pred_path = (fs::path(out_dir) / out_name).string();
    const std::string sidecar_path =
        (fs::path(out_dir) / (fs::path(out_name).stem().string() + ".json"))
            .string();
    Json sidecar{{"image", recorded},
                 {"model", ModelKindName(model.config().kind)},
                 {"mode", SplitModeName(split.mode)},
                 {"classes", m.vocabulary}};
    LabelMap labels;
    if (model.config().kind == ModelKind::kPixelBaseline) {
      labels = RunPixelBaseline(model, image, table, index,
                                cfg.infer.classifier.temperature, ic.gamma);
      sidecar["gamma"] = ic.gamma;
    } else {
      const InferenceResult r = RunInference(model, image, table, index,
                                             images.get(),
                                             cfg.infer.classifier, ic);
      labels = r.labels;
      sidecar["variant"] = VariantName(ic.variant);
      sidecar["gamma"] = ic.gamma;
      sidecar["lambda"] = ic.lambda;
      sidecar["no_object_column"] = cfg.infer.classifier.include_no_object;
      Json queries = Json::array();
      for (size_t q = 0; q < r.masks.size(); ++q) {
        Json jq{{"query", q},
                {"mask_area", Binarize(r.masks[q], ic.threshold).count()},
                {"text_scores", r.text_scores[q]}};
        if (!r.image_scores.empty()) jq["image_scores"] = r.image_scores[q];
        if (!r.fused_scores.empty()) jq["fused_scores"] = r.fused_scores[q];
        queries.push_back(std::move(jq));
      }
      sidecar["queries"] = std::move(queries);
    }
    WriteLabelMap(pred_path, labels);
    WriteFileAtomic(sidecar_path, DumpJson(sidecar));
    outputs.push_back(pred_path);
  }
  return Json{{"predictions", outputs}, {"count", jobs.size()}};
}

Json ToJson(const IoUReport& r, const std::vector<std::string>& vocabulary,
            const SplitIndex& split) {
  Json per_class = Json::array();
  for (size_t c = 0; c < r.per_class.size(); ++c) {
    if (!split.is_seen[c] && !split.is_unseen[c]) continue;
    per_class.push_back(Json{{"class", vocabulary[c]},
                             {"seen", static_cast<bool>(split.is_seen[c])},
                             {"present", static_cast<bool>(r.present[c])},
                             {"iou", r.per_class[c]}});
  }
  return Json{{"mode", SplitModeName(r.mode)},
              {"miou_seen", r.miou_seen},
              {"miou_unseen", r.miou_unseen},
              {"harmonic", r.harmonic},
              {"per_class", per_class}};
}

Json ToJson(const BoundaryReport& r) {
  return Json{{"precision", r.precision}, {"recall", r.recall},
              {"f", r.f},                 {"theta", r.theta},
              {"matched", r.matched},     {"num_pred", r.num_pred},
              {"num_gt", r.num_gt}};
}

namespace {

// Prediction and ground truth for every manifest sample.
std::vector<std::pair<LabelMap, LabelMap>> LoadPairs(
    const std::string& pred_dir, const Manifest& m) {
  std::vector<std::pair<LabelMap, LabelMap>> out;
  for (const auto& s : m.samples) {
    const std::string pred_path =
        (fs::path(pred_dir) / fs::path(s.labels).filename()).string();
    LabelMap pred = ReadLabelMap(pred_path);
    LabelMap gt = ReadLabelMap(m.Resolve(s.labels));
    ZS_CHECK(pred.height == gt.height && pred.width == gt.width,
             ErrorCode::kDimension,
             pred_path + ": prediction is " + std::to_string(pred.height) +
                 "x" + std::to_string(pred.width) + ", ground truth is " +
                 std::to_string(gt.height) + "x" + std::to_string(gt.width));
    out.emplace_back(std::move(pred), std::move(gt));
  }
  return out;
}

}  // namespace

Json EvalCommand(const RunConfig& cfg, const std::string& pred_dir,
                 const std::string& manifest_path,
                 const std::string& report_path) {
  const Manifest m = LoadManifest(manifest_path);
  ClassSplit split = m.split;
  split.mode = cfg.eval.mode;
  const SplitIndex index = ResolveSplit(split, m.vocabulary);
  Confusion conf(static_cast<int>(m.vocabulary.size()));
  const auto pairs = LoadPairs(pred_dir, m);
  for (size_t i = 0; i < pairs.size(); ++i) {
    try {
      ConfusionAccumulate(pairs[i].first, pairs[i].second, conf);
    } catch (const Error& e) {
      Fail(e.code(), m.samples[i].labels + ": " + e.what());
    }
  }
  const Json report = ToJson(MiouReport(conf, index), m.vocabulary, index);
  if (!report_path.empty()) WriteFileAtomic(report_path, DumpJson(report));
  return report;
}

Json EvalBoundaryCommand(const RunConfig& cfg, const std::string& pred_dir,
                         const std::string& manifest_path,
                         const std::string& report_path) {
  const Manifest m = LoadManifest(manifest_path);
  std::vector<BoundaryReport> reports;
  for (const auto& [pred, gt] : LoadPairs(pred_dir, m)) {
    const double theta = cfg.eval.theta > 0
                             ? cfg.eval.theta
                             : DefaultBoundaryTolerance(gt.height, gt.width);
    reports.push_back(BoundaryPrf(pred, gt, theta));
  }
  const Json report = ToJson(AverageBoundaryReports(reports));
  if (!report_path.empty()) WriteFileAtomic(report_path, DumpJson(report));
  return report;
}

std::string BenchHeadCommand(const RunConfig& cfg,
                             const std::string& csv_path) {
  const std::vector<HeadTiming> rows = HeadComplexityBenchmark(cfg.bench);
  std::string csv = "k,t_segment,t_pixel\n";
  for (const auto& r : rows)
    csv += std::to_string(r.k) + "," + FormatDouble(r.t_segment) + "," +
           FormatDouble(r.t_pixel) + "\n";
  if (!csv_path.empty()) WriteFileAtomic(csv_path, csv);
  return csv;
}

}  // namespace zegseg
