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

#ifndef ZEGSEG_IO_H_
#define ZEGSEG_IO_H_

// Persistent formats: PPM/PGM images, label maps, 16-bit soft masks,
// embedding TSV, checkpoints, loss CSV, and atomic whole-file writes.
// Every writer is deterministic, and write -> read -> write reproduces the
// same bytes.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zegseg/embedding.h"
#include "zegseg/model.h"
#include "zegseg/types.h"

namespace zegseg {

// Whole-file helpers. WriteFileAtomic writes a sibling temporary file and
// renames it into place.
std::string ReadFile(const std::string& path);
void WriteFileAtomic(const std::string& path, const std::string& bytes);

// Binary PPM (P6) for 3 channels, PGM (P5) for 1 channel, maxval 255.
// Intensities are stored as round(v * 255).
std::string EncodeImage(const Image& image);
Image DecodeImage(const std::string& bytes);
void WriteImage(const std::string& path, const Image& image);
Image ReadImage(const std::string& path);

// PGM (P5), class index as the pixel value, 255 = kIgnore.
std::string EncodeLabelMap(const LabelMap& labels);
LabelMap DecodeLabelMap(const std::string& bytes);
void WriteLabelMap(const std::string& path, const LabelMap& labels);
LabelMap ReadLabelMap(const std::string& path);

// 16-bit PGM (P5, maxval 65535, big-endian); value / 65535 = probability.
std::string EncodeSoftMask(const SoftMask& mask);
SoftMask DecodeSoftMask(const std::string& bytes);
void WriteSoftMask(const std::string& path, const SoftMask& mask);
SoftMask ReadSoftMask(const std::string& path);

// Shortest decimal that parses back to the same double.
std::string FormatDouble(double v);
double ParseDouble(const std::string& text);

// "#dim <d>" then one "name<TAB>v1 v2 ..." line per entry, in the given
// order.
std::string EncodeEmbeddingTsv(
    const std::vector<std::pair<std::string, Embedding>>& entries);
std::vector<std::pair<std::string, Embedding>> DecodeEmbeddingTsv(
    const std::string& text);
void WriteEmbeddingTsv(
    const std::string& path,
    const std::vector<std::pair<std::string, Embedding>>& entries);
std::vector<std::pair<std::string, Embedding>> ReadEmbeddingTsv(
    const std::string& path);

// Table entries (class names, in table order) from TSV entries; every name
// must be present.
TextEmbeddingTable TableFromEntries(
    const std::vector<std::pair<std::string, Embedding>>& entries,
    const std::vector<std::string>& class_names);

// Checkpoint: "ZEGF", u32 version, u32 header length, JSON header (model
// config plus tensor names and shapes), then little-endian float32 payloads
// in header order.
inline constexpr uint32_t kCheckpointVersion = 1;
std::string EncodeCheckpoint(const Segmenter& model);
Segmenter DecodeCheckpoint(const std::string& bytes);
void WriteCheckpoint(const std::string& path, const Segmenter& model);
Segmenter ReadCheckpoint(const std::string& path);

// "step,loss" header, then one row per step (1-based).
std::string EncodeLossCsv(const std::vector<double>& losses);
std::vector<double> DecodeLossCsv(const std::string& text);

}  // namespace zegseg

#endif  // ZEGSEG_IO_H_
