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

#include "zegseg/io.h"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "zegseg/config.h"
#include "zegseg/error.h"

namespace zegseg {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint code assumes a little-endian host");

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  size_t data_offset = 0;
};

// Parses "P5/P6 <w> <h> <maxval>" with comments, followed by one whitespace
// byte before the raster.
PnmHeader ParsePnmHeader(const std::string& bytes) {
  PnmHeader h;
  size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    int v = 0;
    auto [ptr, ec] =
        std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), v);
    ZS_CHECK(ec == std::errc() && v > 0, ErrorCode::kParse,
             std::string("bad PNM ") + what);
    pos = ptr - bytes.data();
    return v;
  };
  ZS_CHECK(bytes.size() >= 2, ErrorCode::kParse, "truncated PNM header");
  h.magic = bytes.substr(0, 2);
  pos = 2;
  h.width = read_int("width");
  h.height = read_int("height");
  h.maxval = read_int("maxval");
  ZS_CHECK(pos < bytes.size() &&
               std::isspace(static_cast<unsigned char>(bytes[pos])),
           ErrorCode::kParse, "PNM header not followed by whitespace");
  h.data_offset = pos + 1;
  return h;
}

std::string PnmHeaderText(const char* magic, int width, int height,
                          int maxval) {
  return std::string(magic) + "\n" + std::to_string(width) + " " +
         std::to_string(height) + "\n" + std::to_string(maxval) + "\n";
}

void AppendU32(std::string& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

uint32_t ReadU32(const std::string& bytes, size_t& pos) {
  ZS_CHECK(pos + 4 <= bytes.size(), ErrorCode::kParse, "truncated checkpoint");
  uint32_t v;
  std::memcpy(&v, bytes.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ZS_CHECK(in.good(), ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  ZS_CHECK(!in.bad(), ErrorCode::kIo, "error reading " + path);
  return ss.str();
}

void WriteFileAtomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    ZS_CHECK(!ec, ErrorCode::kIo,
             "cannot create directory " + target.parent_path().string());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    ZS_CHECK(out.good(), ErrorCode::kIo, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    ZS_CHECK(out.good(), ErrorCode::kIo, "error writing " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  ZS_CHECK(!ec, ErrorCode::kIo, "cannot rename " + tmp + " to " + path);
}

std::string EncodeImage(const Image& image) {
  image.Validate();
  ZS_CHECK(image.channels == 1 || image.channels == 3, ErrorCode::kDimension,
           "only 1- or 3-channel images can be written");
  std::string out = PnmHeaderText(image.channels == 3 ? "P6" : "P5",
                                  image.width, image.height, 255);
  out.reserve(out.size() + image.data.size());
  for (double v : image.data)
    out.push_back(static_cast<char>(std::lround(v * 255.0)));
  return out;
}

Image DecodeImage(const std::string& bytes) {
  const PnmHeader h = ParsePnmHeader(bytes);
  ZS_CHECK(h.magic == "P5" || h.magic == "P6", ErrorCode::kParse,
           "not a binary PGM/PPM image");
  ZS_CHECK(h.maxval == 255, ErrorCode::kParse, "image maxval must be 255");
  const int channels = h.magic == "P6" ? 3 : 1;
  Image image(h.height, h.width, channels);
  ZS_CHECK(bytes.size() - h.data_offset == image.data.size(), ErrorCode::kParse,
           "image raster has the wrong length");
  for (size_t i = 0; i < image.data.size(); ++i)
    image.data[i] =
        static_cast<unsigned char>(bytes[h.data_offset + i]) / 255.0;
  return image;
}

void WriteImage(const std::string& path, const Image& image) {
  WriteFileAtomic(path, EncodeImage(image));
}

Image ReadImage(const std::string& path) {
  try {
    return DecodeImage(ReadFile(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    Fail(e.code(), path + ": " + e.what());
  }
}

std::string EncodeLabelMap(const LabelMap& labels) {
  std::string out = PnmHeaderText("P5", labels.width, labels.height, 255);
  for (int v : labels.labels) {
    ZS_CHECK(v >= 0 && v <= kIgnore, ErrorCode::kInvariant,
             "label " + std::to_string(v) + " does not fit in a byte");
    out.push_back(static_cast<char>(v));
  }
  return out;
}

LabelMap DecodeLabelMap(const std::string& bytes) {
  const PnmHeader h = ParsePnmHeader(bytes);
  ZS_CHECK(h.magic == "P5" && h.maxval == 255, ErrorCode::kParse,
           "label maps are 8-bit PGM");
  LabelMap labels(h.height, h.width);
  ZS_CHECK(bytes.size() - h.data_offset == labels.size(), ErrorCode::kParse,
           "label raster has the wrong length");
  for (size_t i = 0; i < labels.size(); ++i)
    labels.labels[i] = static_cast<unsigned char>(bytes[h.data_offset + i]);
  return labels;
}

void WriteLabelMap(const std::string& path, const LabelMap& labels) {
  WriteFileAtomic(path, EncodeLabelMap(labels));
}

LabelMap ReadLabelMap(const std::string& path) {
  try {
    return DecodeLabelMap(ReadFile(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    Fail(e.code(), path + ": " + e.what());
  }
}

std::string EncodeSoftMask(const SoftMask& mask) {
  std::string out = PnmHeaderText("P5", mask.width, mask.height, 65535);
  for (double v : mask.values) {
    ZS_CHECK(v >= 0.0 && v <= 1.0, ErrorCode::kInvariant,
             "soft mask value outside [0,1]");
    const long q = std::lround(v * 65535.0);
    out.push_back(static_cast<char>((q >> 8) & 0xff));
    out.push_back(static_cast<char>(q & 0xff));
  }
  return out;
}

SoftMask DecodeSoftMask(const std::string& bytes) {
  const PnmHeader h = ParsePnmHeader(bytes);
  ZS_CHECK(h.magic == "P5" && h.maxval == 65535, ErrorCode::kParse,
           "soft masks are 16-bit PGM");
  SoftMask mask(h.height, h.width);
  ZS_CHECK(bytes.size() - h.data_offset == 2 * mask.size(), ErrorCode::kParse,
           "soft mask raster has the wrong length");
  for (size_t i = 0; i < mask.size(); ++i) {
    const unsigned hi = static_cast<unsigned char>(bytes[h.data_offset + 2 * i]);
    const unsigned lo =
        static_cast<unsigned char>(bytes[h.data_offset + 2 * i + 1]);
    mask.values[i] = ((hi << 8) | lo) / 65535.0;
  }
  return mask;
}

void WriteSoftMask(const std::string& path, const SoftMask& mask) {
  WriteFileAtomic(path, EncodeSoftMask(mask));
}

SoftMask ReadSoftMask(const std::string& path) {
  return DecodeSoftMask(ReadFile(path));
}

std::string FormatDouble(double v) {
  ZS_CHECK(std::isfinite(v), ErrorCode::kNumeric, "non-finite value");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  ZS_CHECK(ec == std::errc(), ErrorCode::kInvariant, "float formatting failed");
  return std::string(buf, ptr);
}

double ParseDouble(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  ZS_CHECK(ec == std::errc() && ptr == text.data() + text.size() &&
               std::isfinite(v),
           ErrorCode::kParse, "bad number '" + text + "'");
  return v;
}

std::string EncodeEmbeddingTsv(
    const std::vector<std::pair<std::string, Embedding>>& entries) {
  const int dim = entries.empty() ? 0 : entries.front().second.dim();
  std::string out = "#dim " + std::to_string(dim) + "\n";
  for (const auto& [name, e] : entries) {
    ZS_CHECK(e.dim() == dim, ErrorCode::kDimension,
             "embedding '" + name + "' has a different dimension");
    ZS_CHECK(name.find_first_of("\t\n") == std::string::npos,
             ErrorCode::kConfig, "names may not contain tabs or newlines");
    out += name;
    out += '\t';
    for (int i = 0; i < dim; ++i) {
      if (i) out += ' ';
      out += FormatDouble(e.values[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, Embedding>> DecodeEmbeddingTsv(
    const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ZS_CHECK(static_cast<bool>(std::getline(in, line)) &&
               line.rfind("#dim ", 0) == 0,
           ErrorCode::kParse, "embedding file must start with '#dim <d>'");
  int dim = 0;
  {
    const std::string d = line.substr(5);
    auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), dim);
    ZS_CHECK(ec == std::errc() && ptr == d.data() + d.size() && dim >= 0,
             ErrorCode::kParse, "bad '#dim' header");
  }
  std::vector<std::pair<std::string, Embedding>> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t tab = line.find('\t');
    ZS_CHECK(tab != std::string::npos, ErrorCode::kParse,
             "line " + std::to_string(lineno) + ": missing tab");
    Embedding e;
    std::istringstream fields(line.substr(tab + 1));
    std::string tok;
    while (fields >> tok) e.values.push_back(ParseDouble(tok));
    ZS_CHECK(e.dim() == dim, ErrorCode::kParse,
             "line " + std::to_string(lineno) + ": expected " +
                 std::to_string(dim) + " values");
    out.emplace_back(line.substr(0, tab), std::move(e));
  }
  return out;
}

void WriteEmbeddingTsv(
    const std::string& path,
    const std::vector<std::pair<std::string, Embedding>>& entries) {
  WriteFileAtomic(path, EncodeEmbeddingTsv(entries));
}

std::vector<std::pair<std::string, Embedding>> ReadEmbeddingTsv(
    const std::string& path) {
  try {
    return DecodeEmbeddingTsv(ReadFile(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    Fail(e.code(), path + ": " + e.what());
  }
}

TextEmbeddingTable TableFromEntries(
    const std::vector<std::pair<std::string, Embedding>>& entries,
    const std::vector<std::string>& class_names) {
  TextEmbeddingTable table;
  for (const auto& name : class_names) {
    const Embedding* found = nullptr;
    for (const auto& [n, e] : entries)
      if (n == name) found = &e;
    ZS_CHECK(found != nullptr, ErrorCode::kConfig,
             "no embedding for class '" + name + "'");
    table.class_names.push_back(name);
    table.embeddings.push_back(Normalized(*found));
  }
  return table;
}

std::string EncodeCheckpoint(const Segmenter& model) {
  const ParameterStore& p = model.params();
  Json tensors = Json::array();
  for (size_t i = 0; i < p.names.size(); ++i)
    tensors.push_back(Json{{"name", p.names[i]},
                           {"shape", {p.tensors[i].rows, p.tensors[i].cols}}});
  const Json header{{"model", ModelConfigToJson(model.config())},
                    {"tensors", tensors}};
  const std::string text = header.dump();
  std::string out = "ZEGF";
  AppendU32(out, kCheckpointVersion);
  AppendU32(out, static_cast<uint32_t>(text.size()));
  out += text;
  for (const auto& t : p.tensors)
    for (double v : t.v) {
      const float f = static_cast<float>(v);
      ZS_CHECK(std::isfinite(f), ErrorCode::kNumeric,
               "non-finite parameter in checkpoint");
      char b[4];
      std::memcpy(b, &f, 4);
      out.append(b, 4);
    }
  return out;
}

Segmenter DecodeCheckpoint(const std::string& bytes) {
  ZS_CHECK(bytes.size() >= 12 && bytes.compare(0, 4, "ZEGF") == 0,
           ErrorCode::kParse, "not a checkpoint (bad magic)");
  size_t pos = 4;
  const uint32_t version = ReadU32(bytes, pos);
  ZS_CHECK(version == kCheckpointVersion, ErrorCode::kParse,
           "unsupported checkpoint version " + std::to_string(version));
  const uint32_t len = ReadU32(bytes, pos);
  ZS_CHECK(pos + len <= bytes.size(), ErrorCode::kParse,
           "truncated checkpoint header");
  const Json header = ParseJson(bytes.substr(pos, len), "checkpoint header");
  pos += len;
  ModelConfig cfg;
  try {
    cfg = ModelConfigFromJson(header.at("model"));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  ParameterStore store;
  try {
    for (const auto& t : header.at("tensors")) {
      const int rows = t.at("shape").at(0).get<int>();
      const int cols = t.at("shape").at(1).get<int>();
      ZS_CHECK(rows >= 0 && cols >= 0, ErrorCode::kParse, "bad tensor shape");
      ad::Matrix m(rows, cols);
      ZS_CHECK(pos + 4 * m.size() <= bytes.size(), ErrorCode::kParse,
               "truncated checkpoint payload");
      for (double& v : m.v) {
        float f;
        std::memcpy(&f, bytes.data() + pos, 4);
        pos += 4;
        v = f;
      }
      store.Add(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParse, std::string("checkpoint header: ") + e.what());
  }
  ZS_CHECK(pos == bytes.size(), ErrorCode::kParse,
           "trailing bytes after checkpoint payload");
  return Segmenter(cfg, std::move(store));
}

void WriteCheckpoint(const std::string& path, const Segmenter& model) {
  WriteFileAtomic(path, EncodeCheckpoint(model));
}

Segmenter ReadCheckpoint(const std::string& path) {
  try {
    return DecodeCheckpoint(ReadFile(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    Fail(e.code(), path + ": " + e.what());
  }
}

std::string EncodeLossCsv(const std::vector<double>& losses) {
  std::string out = "step,loss\n";
  for (size_t i = 0; i < losses.size(); ++i)
    out += std::to_string(i + 1) + "," + FormatDouble(losses[i]) + "\n";
  return out;
}

std::vector<double> DecodeLossCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ZS_CHECK(static_cast<bool>(std::getline(in, line)) && line == "step,loss",
           ErrorCode::kParse, "loss CSV must start with 'step,loss'");
  std::vector<double> out;
  while (std::getline(in, line)) {
    const size_t comma = line.find(',');
    ZS_CHECK(comma != std::string::npos, ErrorCode::kParse,
             "bad loss CSV row '" + line + "'");
    ZS_CHECK(line.substr(0, comma) == std::to_string(out.size() + 1),
             ErrorCode::kParse, "loss CSV steps must count up from 1");
    out.push_back(ParseDouble(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace zegseg
