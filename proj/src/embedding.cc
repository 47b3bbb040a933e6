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

#include "zegseg/embedding.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "zegseg/error.h"
#include "zegseg/rng.h"

namespace zegseg {

void PromptTemplateSet::Validate() const {
  ZS_CHECK(!templates.empty(), ErrorCode::kConfig, "no prompt templates");
  for (const auto& t : templates) {
    size_t first = t.find("{}");
    ZS_CHECK(first != std::string::npos &&
                 t.find("{}", first + 2) == std::string::npos,
             ErrorCode::kConfig,
             "prompt template needs exactly one {} placeholder: " + t);
  }
}

PromptTemplateSet DefaultPromptTemplates() {
  return {{
      "a photo of a {}.",
      "This is a photo of a {}",
      "This is a photo of a small {}",
      "This is a photo of a medium {}",
      "This is a photo of a large {}",
      "This is a photo of a {}",
      "This is a photo of a small {}",
      "This is a photo of a medium {}",
      "This is a photo of a large {}",
      "a photo of a {} in the scene",
      "a photo of a {} in the scene",
      "There is a {} in the scene",
      "There is the {} in the scene",
      "This is a {} in the scene",
      "This is the {} in the scene",
      "This is one {} in the scene",
  }};
}

PromptTemplateSet SinglePromptTemplate() {
  return {{"A photo of the {} in the scene."}};
}

std::string FillTemplate(const std::string& tmpl, const std::string& name) {
  std::string out = tmpl;
  size_t pos = out.find("{}");
  ZS_CHECK(pos != std::string::npos, ErrorCode::kConfig,
           "template has no placeholder: " + tmpl);
  out.replace(pos, 2, name);
  return out;
}

int TextEmbeddingTable::dim() const {
  if (!embeddings.empty()) return embeddings.front().dim();
  return no_object.dim();
}

int TextEmbeddingTable::IndexOf(const std::string& name) const {
  for (size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

TextEmbeddingTable TextEmbeddingTable::Select(
    const std::vector<std::string>& names) const {
  TextEmbeddingTable out;
  out.no_object = no_object;
  for (const auto& name : names) {
    int idx = IndexOf(name);
    ZS_CHECK(idx >= 0, ErrorCode::kConfig,
             "embedding table has no entry for class '" + name + "'");
    out.class_names.push_back(name);
    out.embeddings.push_back(embeddings[idx]);
  }
  return out;
}

void TextEmbeddingTable::Validate() const {
  ZS_CHECK(class_names.size() == embeddings.size(), ErrorCode::kInvariant,
           "table names and embeddings differ in length");
  std::set<std::string> unique(class_names.begin(), class_names.end());
  ZS_CHECK(unique.size() == class_names.size(), ErrorCode::kConfig,
           "duplicate class name in embedding table");
  const int d = dim();
  for (const auto& e : embeddings) {
    ZS_CHECK(e.dim() == d, ErrorCode::kDimension,
             "embedding table dimensions differ");
    for (double v : e.values)
      ZS_CHECK(std::isfinite(v), ErrorCode::kInvariant,
               "non-finite embedding value");
  }
  if (!no_object.values.empty()) {
    ZS_CHECK(no_object.dim() == d, ErrorCode::kDimension,
             "no-object embedding has the wrong dimension");
  }
}

TableTextProvider::TableTextProvider(std::map<std::string, Embedding> entries)
    : entries_(std::move(entries)) {
  if (!entries_.empty()) dim_ = entries_.begin()->second.dim();
}

Embedding TableTextProvider::Embed(const std::string& text) const {
  auto it = entries_.find(text);
  ZS_CHECK(it != entries_.end(), ErrorCode::kProvider,
           "no embedding for '" + text + "'");
  return it->second;
}

double Norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Embedding Normalized(const Embedding& e) {
  const double n = Norm(e.values);
  ZS_CHECK(n > 0.0 && std::isfinite(n), ErrorCode::kDegenerateEmbedding,
           "cannot normalise a zero or non-finite embedding");
  Embedding out;
  out.values.resize(e.values.size());
  for (size_t i = 0; i < e.values.size(); ++i) out.values[i] = e.values[i] / n;
  out.normalized = true;
  return out;
}

Embedding EnsembleEmbeddings(const std::vector<Embedding>& per_template) {
  ZS_CHECK(!per_template.empty(), ErrorCode::kDegenerateEmbedding,
           "cannot ensemble an empty list");
  const int d = per_template.front().dim();
  Embedding mean;
  mean.values.assign(d, 0.0);
  for (const auto& e : per_template) {
    ZS_CHECK(e.dim() == d, ErrorCode::kDimension,
             "ensemble inputs differ in dimension");
    for (int i = 0; i < d; ++i) mean.values[i] += e.values[i];
  }
  for (double& v : mean.values) v /= static_cast<double>(per_template.size());
  // A mean this small is cancellation, not signal.
  ZS_CHECK(Norm(mean.values) > 1e-12, ErrorCode::kDegenerateEmbedding,
           "prompt ensemble averages to the zero vector");
  return Normalized(mean);
}

double CosineSimilarity(const std::vector<double>& a,
                        const std::vector<double>& b) {
  ZS_CHECK(a.size() == b.size(), ErrorCode::kDimension,
           "cosine similarity of vectors with different dimensions");
  const double na = Norm(a);
  const double nb = Norm(b);
  ZS_CHECK(na > 0.0 && nb > 0.0, ErrorCode::kDegenerateEmbedding,
           "cosine similarity with a zero-norm vector");
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i) dot += (a[i] / na) * (b[i] / nb);
  return std::clamp(dot, -1.0, 1.0);
}

double CosineSimilarity(const Embedding& a, const Embedding& b) {
  return CosineSimilarity(a.values, b.values);
}

Embedding InitNoObjectEmbedding(int dim, uint64_t seed) {
  auto rng = MakeRng(seed, {HashString("no_object")});
  std::normal_distribution<double> normal(0.0, 1.0);
  Embedding e;
  e.values.resize(dim);
  for (double& v : e.values) v = normal(rng);
  return Normalized(e);
}

TextEmbeddingTable BuildTextTable(const std::vector<std::string>& class_names,
                                  const PromptTemplateSet& templates,
                                  const TextEmbeddingProvider& provider,
                                  uint64_t seed) {
  templates.Validate();
  std::set<std::string> unique(class_names.begin(), class_names.end());
  ZS_CHECK(unique.size() == class_names.size(), ErrorCode::kConfig,
           "duplicate class name");
  TextEmbeddingTable table;
  for (const auto& name : class_names) {
    std::vector<Embedding> per_template;
    for (const auto& t : templates.templates) {
      try {
        per_template.push_back(provider.Embed(FillTemplate(t, name)));
      } catch (const Error& e) {
        Fail(e.code(), "embedding provider failed for class '" + name +
                           "': " + e.what());
      }
    }
    table.class_names.push_back(name);
    table.embeddings.push_back(EnsembleEmbeddings(per_template));
  }
  table.no_object = InitNoObjectEmbedding(provider.dim(), seed);
  table.Validate();
  return table;
}

}  // namespace zegseg
