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

#ifndef ZEGSEG_EMBEDDING_H_
#define ZEGSEG_EMBEDDING_H_

// Text-embedding tables: prompt ensembling, cosine similarity, the
// learnable no-object entry, and the provider interfaces that stand in for
// a vision-language model's text and image encoders.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "zegseg/types.h"

namespace zegseg {

struct Embedding {
  std::vector<double> values;
  bool normalized = false;

  int dim() const { return static_cast<int>(values.size()); }
};

struct PromptTemplateSet {
  std::vector<std::string> templates;

  // Throws kConfig unless nonempty with exactly one "{}" per template.
  void Validate() const;
};

// The sixteen-template ensemble, duplicates included.
PromptTemplateSet DefaultPromptTemplates();
// "A photo of the {} in the scene."
PromptTemplateSet SinglePromptTemplate();
std::string FillTemplate(const std::string& tmpl, const std::string& name);

struct TextEmbeddingTable {
  std::vector<std::string> class_names;
  std::vector<Embedding> embeddings;
  Embedding no_object;

  int dim() const;
  int size() const { return static_cast<int>(class_names.size()); }
  int IndexOf(const std::string& name) const;  // -1 if absent
  // Subset in the given order; no_object is carried over.
  TextEmbeddingTable Select(const std::vector<std::string>& names) const;
  void Validate() const;
};

// Maps any string deterministically to an embedding of fixed dimension.
class TextEmbeddingProvider {
 public:
  virtual ~TextEmbeddingProvider() = default;
  virtual Embedding Embed(const std::string& text) const = 0;
  virtual int dim() const = 0;
};

// Stand-in for an image encoder.
class ImageEmbeddingProvider {
 public:
  virtual ~ImageEmbeddingProvider() = default;
  virtual Embedding Embed(const Image& image) const = 0;
  virtual int dim() const = 0;
};

// Exact-string lookup into a loaded embedding file. Keys may be class names
// or fully expanded prompts.
class TableTextProvider : public TextEmbeddingProvider {
 public:
  explicit TableTextProvider(std::map<std::string, Embedding> entries);
  Embedding Embed(const std::string& text) const override;
  int dim() const override { return dim_; }

 private:
  std::map<std::string, Embedding> entries_;
  int dim_ = 0;
};

double Norm(const std::vector<double>& v);
// Throws kDegenerateEmbedding on a zero vector.
Embedding Normalized(const Embedding& e);

// Elementwise mean then L2 normalisation.
Embedding EnsembleEmbeddings(const std::vector<Embedding>& per_template);

double CosineSimilarity(const Embedding& a, const Embedding& b);
double CosineSimilarity(const std::vector<double>& a,
                        const std::vector<double>& b);

// Deterministic pseudo-random unit vector for the no-object entry.
Embedding InitNoObjectEmbedding(int dim, uint64_t seed);

TextEmbeddingTable BuildTextTable(const std::vector<std::string>& class_names,
                                  const PromptTemplateSet& templates,
                                  const TextEmbeddingProvider& provider,
                                  uint64_t seed);

}  // namespace zegseg

#endif  // ZEGSEG_EMBEDDING_H_
