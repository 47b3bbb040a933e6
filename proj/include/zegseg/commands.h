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

#ifndef ZEGSEG_COMMANDS_H_
#define ZEGSEG_COMMANDS_H_

// End-to-end commands behind the CLI and the C API. Each writes its files
// deterministically and returns a JSON summary.

#include <string>

#include "zegseg/config.h"
#include "zegseg/evaluation.h"

namespace zegseg {

// Scenes, label maps, manifest.json, split.json, embeddings.tsv (oracle text
// embeddings of the whole vocabulary) and the effective config.json.
// Returns the manifest.
Manifest GenerateData(const RunConfig& cfg, const std::string& out_dir);

// Trains on a manifest whose labels are all seen classes; writes the
// checkpoint and the loss CSV. `embeddings` overrides the manifest's TSV
// when nonempty.
Json TrainCommand(const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& checkpoint_path,
                  const std::string& loss_csv_path,
                  const std::string& embeddings = "");

// Predicts every manifest sample (or one image when `input` is not a .json
// file). Each prediction is written as <out_dir>/<label file name>, with a
// <stem>.json sidecar holding the per-query scores.
Json InferCommand(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& input, const std::string& out_dir,
                  const std::string& embeddings = "");

Json ToJson(const IoUReport& r, const std::vector<std::string>& vocabulary,
            const SplitIndex& split);
Json ToJson(const BoundaryReport& r);

// mIoU report of predictions in `pred_dir` against the manifest, mode from
// cfg.eval. Writes the report to `report_path` when nonempty.
Json EvalCommand(const RunConfig& cfg, const std::string& pred_dir,
                 const std::string& manifest_path,
                 const std::string& report_path = "");

Json EvalBoundaryCommand(const RunConfig& cfg, const std::string& pred_dir,
                         const std::string& manifest_path,
                         const std::string& report_path = "");

// "k,t_segment,t_pixel" rows. Writes to `csv_path` when nonempty.
std::string BenchHeadCommand(const RunConfig& cfg,
                             const std::string& csv_path = "");

}  // namespace zegseg

#endif  // ZEGSEG_COMMANDS_H_
