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

#include "zegseg/evaluation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <string>

#include "zegseg/error.h"
#include "zegseg/rng.h"

namespace zegseg {

Confusion::Confusion(int k)
    : num_classes(k), counts(static_cast<size_t>(k) * k, 0) {
  ZS_CHECK(k > 0, ErrorCode::kConfig, "confusion needs at least one class");
}

void Confusion::Merge(const Confusion& other) {
  ZS_CHECK(other.num_classes == num_classes, ErrorCode::kDimension,
           "confusion matrices differ in size");
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

void ConfusionAccumulate(const LabelMap& pred, const LabelMap& gt,
                         Confusion& confusion) {
  ZS_CHECK(pred.height == gt.height && pred.width == gt.width &&
               pred.size() == gt.size(),
           ErrorCode::kDimension, "prediction and ground truth differ in size");
  const int k = confusion.num_classes;
  for (size_t i = 0; i < gt.size(); ++i) {
    const int g = gt.labels[i];
    if (g == kIgnore) continue;
    const int p = pred.labels[i];
    ZS_CHECK(g >= 0 && g < k, ErrorCode::kInvariant,
             "ground-truth label " + std::to_string(g) + " out of range");
    ZS_CHECK(p >= 0 && p < k, ErrorCode::kInvariant,
             "predicted label " + std::to_string(p) + " out of range");
    ++confusion.counts[static_cast<size_t>(g) * k + p];
  }
}

double HarmonicMean(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return 2.0 * a * b / (a + b);
}

IoUReport MiouReport(const Confusion& confusion, const SplitIndex& split) {
  const int k = confusion.num_classes;
  ZS_CHECK(split.num_classes == k, ErrorCode::kDimension,
           "split and confusion disagree on class count");
  ZS_CHECK(!split.seen.empty() || !split.unseen.empty(), ErrorCode::kConfig,
           "empty class sets");
  const bool zs3 = split.mode == SplitMode::kZs3;
  ZS_CHECK(!zs3 || !split.unseen.empty(), ErrorCode::kConfig,
           "ZS3 evaluation needs unseen classes");
  // In ZS3 only rows of unseen ground truth count.
  auto row_used = [&](int g) { return !zs3 || split.is_unseen[g]; };

  IoUReport r;
  r.mode = split.mode;
  r.per_class.assign(k, 0.0);
  r.present.assign(k, false);
  for (int c = 0; c < k; ++c) {
    if (zs3 && !split.is_unseen[c]) continue;
    int64_t tp = confusion.at(c, c);
    int64_t fn = 0, fp = 0;
    for (int o = 0; o < k; ++o) {
      if (o == c) continue;
      fn += confusion.at(c, o);
      if (row_used(o)) fp += confusion.at(o, c);
    }
    const int64_t denom = tp + fp + fn;
    if (denom == 0) continue;
    r.present[c] = true;
    r.per_class[c] = static_cast<double>(tp) / static_cast<double>(denom);
  }
  auto mean_over = [&](const std::vector<int>& cls) {
    double s = 0.0;
    int n = 0;
    for (int c : cls) {
      if (!r.present[c]) continue;
      s += r.per_class[c];
      ++n;
    }
    return n ? s / n : 0.0;
  };
  r.miou_seen = zs3 ? 0.0 : mean_over(split.seen);
  r.miou_unseen = mean_over(split.unseen);
  r.harmonic = HarmonicMean(r.miou_seen, r.miou_unseen);
  return r;
}

BinaryMask BoundaryPixels(const LabelMap& labels) {
  BinaryMask out(labels.height, labels.width, 0);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      const int v = labels.at(y, x);
      if ((x + 1 < labels.width && labels.at(y, x + 1) != v) ||
          (y + 1 < labels.height && labels.at(y + 1, x) != v))
        out.at(y, x) = 1;
    }
  }
  return out;
}

double DefaultBoundaryTolerance(int height, int width) {
  const double diag = std::sqrt(static_cast<double>(height) * height +
                                static_cast<double>(width) * width);
  return std::max(1.0, std::round(0.0075 * diag));
}

namespace {

// Hopcroft-Karp on an explicit left->right adjacency list.
int64_t MaxBipartiteMatching(const std::vector<std::vector<int>>& adj,
                             int num_right) {
  const int n = static_cast<int>(adj.size());
  const int inf = std::numeric_limits<int>::max();
  std::vector<int> match_l(n, -1), match_r(num_right, -1), dist(n);
  auto bfs = [&]() {
    std::queue<int> q;
    bool found = false;
    for (int u = 0; u < n; ++u) {
      if (match_l[u] < 0) {
        dist[u] = 0;
        q.push(u);
      } else {
        dist[u] = inf;
      }
    }
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        const int w = match_r[v];
        if (w < 0) {
          found = true;
        } else if (dist[w] == inf) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  };
  // Iterative DFS along the layered graph.
  std::vector<size_t> it(n);
  auto dfs = [&](int root) {
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int u = stack.back();
      bool advanced = false;
      while (it[u] < adj[u].size()) {
        const int v = adj[u][it[u]];
        const int w = match_r[v];
        if (w < 0) {
          // Augment along the stack.
          int right = v;
          for (int i = static_cast<int>(stack.size()) - 1; i >= 0; --i) {
            const int left = stack[i];
            const int prev = match_l[left];
            match_l[left] = right;
            match_r[right] = left;
            right = prev;
          }
          return true;
        }
        if (dist[w] == dist[u] + 1) {
          stack.push_back(w);
          advanced = true;
          break;
        }
        ++it[u];
      }
      if (!advanced) {
        dist[u] = inf;
        stack.pop_back();
        if (!stack.empty()) ++it[stack.back()];
      }
    }
    return false;
  };
  int64_t matched = 0;
  while (bfs()) {
    std::fill(it.begin(), it.end(), 0);
    for (int u = 0; u < n; ++u)
      if (match_l[u] < 0 && dfs(u)) ++matched;
  }
  return matched;
}

}  // namespace

int64_t MatchBoundaries(const BinaryMask& pred_boundary,
                        const BinaryMask& gt_boundary, double theta) {
  ZS_CHECK(pred_boundary.height == gt_boundary.height &&
               pred_boundary.width == gt_boundary.width,
           ErrorCode::kDimension, "boundary maps differ in size");
  ZS_CHECK(theta >= 0.0, ErrorCode::kConfig, "theta must be >= 0");
  const int h = gt_boundary.height;
  const int w = gt_boundary.width;
  std::vector<int> gt_index(static_cast<size_t>(h) * w, -1);
  int num_gt = 0;
  for (int i = 0; i < h * w; ++i)
    if (gt_boundary.bits[i]) gt_index[i] = num_gt++;
  const int r = static_cast<int>(std::floor(theta));
  const double t2 = theta * theta;
  std::vector<std::vector<int>> adj;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!pred_boundary.at(y, x)) continue;
      std::vector<int> nbrs;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          if (dy * dy + dx * dx > t2) continue;
          const int g = gt_index[static_cast<size_t>(yy) * w + xx];
          if (g >= 0) nbrs.push_back(g);
        }
      }
      adj.push_back(std::move(nbrs));
    }
  }
  return MaxBipartiteMatching(adj, num_gt);
}

namespace {

BoundaryReport ReportFromBoundaries(const BinaryMask& pb, const BinaryMask& gb,
                                    double theta) {
  BoundaryReport r;
  r.theta = theta;
  r.num_pred = static_cast<int64_t>(pb.count());
  r.num_gt = static_cast<int64_t>(gb.count());
  if (r.num_pred == 0 && r.num_gt == 0) {
    r.precision = r.recall = r.f = 1.0;
    return r;
  }
  r.matched = MatchBoundaries(pb, gb, theta);
  r.precision = r.num_pred ? static_cast<double>(r.matched) / r.num_pred : 0.0;
  r.recall = r.num_gt ? static_cast<double>(r.matched) / r.num_gt : 0.0;
  const double s = r.precision + r.recall;
  r.f = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

LabelMap FromBinary(const BinaryMask& m) {
  LabelMap out(m.height, m.width, 0);
  for (size_t i = 0; i < m.size(); ++i) out.labels[i] = m.bits[i] ? 1 : 0;
  return out;
}

}  // namespace

BoundaryReport BoundaryPrf(const LabelMap& pred, const LabelMap& gt,
                           double theta) {
  ZS_CHECK(pred.height == gt.height && pred.width == gt.width,
           ErrorCode::kDimension, "prediction and ground truth differ in size");
  return ReportFromBoundaries(BoundaryPixels(pred), BoundaryPixels(gt), theta);
}

BoundaryReport BoundaryPrf(const BinaryMask& pred, const BinaryMask& gt,
                           double theta) {
  return BoundaryPrf(FromBinary(pred), FromBinary(gt), theta);
}

BoundaryReport AverageBoundaryReports(const std::vector<BoundaryReport>& rs) {
  BoundaryReport out;
  if (rs.empty()) return out;
  for (const auto& r : rs) {
    out.precision += r.precision;
    out.recall += r.recall;
    out.f += r.f;
    out.matched += r.matched;
    out.num_pred += r.num_pred;
    out.num_gt += r.num_gt;
  }
  const double n = static_cast<double>(rs.size());
  out.precision /= n;
  out.recall /= n;
  out.f /= n;
  out.theta = rs.front().theta;
  return out;
}

void HeadBenchmarkConfig::Validate() const {
  ZS_CHECK(num_queries > 0 && height > 0 && width > 0 && embed_dim > 0,
           ErrorCode::kConfig, "benchmark sizes must be positive");
  ZS_CHECK(repetitions >= 5, ErrorCode::kConfig,
           "benchmark needs at least 5 repetitions");
  ZS_CHECK(!k_values.empty(), ErrorCode::kConfig, "no K values");
  for (size_t i = 0; i < k_values.size(); ++i) {
    ZS_CHECK(k_values[i] > 0, ErrorCode::kConfig, "K must be positive");
    ZS_CHECK(i == 0 || k_values[i] > k_values[i - 1], ErrorCode::kConfig,
             "K values must be sorted ascending");
  }
}

namespace {

// rows x dim embeddings against a K x dim table, then a softmax per row.
double ClassifyHead(const std::vector<double>& x, int rows,
                    const std::vector<double>& table, int k, int dim,
                    std::vector<double>& logits) {
  double checksum = 0.0;
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data() + static_cast<size_t>(r) * dim;
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      const double* tc = table.data() + static_cast<size_t>(c) * dim;
      double s = 0.0;
      for (int d = 0; d < dim; ++d) s += xr[d] * tc[d];
      logits[c] = s;
      m = std::max(m, s);
    }
    double z = 0.0;
    for (int c = 0; c < k; ++c) {
      logits[c] = std::exp(logits[c] - m);
      z += logits[c];
    }
    checksum += logits[0] / z;
  }
  return checksum;
}

double TimeHead(const std::vector<double>& x, int rows,
                const std::vector<double>& table, int k, int dim,
                int repetitions, double min_seconds, volatile double& sink) {
  using Clock = std::chrono::steady_clock;
  std::vector<double> logits(k);
  std::vector<double> samples;
  for (int rep = 0; rep < repetitions; ++rep) {
    int64_t calls = 0;
    const auto start = Clock::now();
    double elapsed = 0.0;
    do {
      sink = sink + ClassifyHead(x, rows, table, k, dim, logits);
      ++calls;
      elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    } while (elapsed < min_seconds);
    samples.push_back(elapsed / static_cast<double>(calls));
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2,
                   samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

std::vector<HeadTiming> HeadComplexityBenchmark(
    const HeadBenchmarkConfig& cfg) {
  cfg.Validate();
  auto rng = MakeRng(cfg.seed, {HashString("bench-head")});
  std::normal_distribution<double> normal(0.0, 1.0);
  const int pixels = cfg.height * cfg.width;
  const int dim = cfg.embed_dim;
  std::vector<double> seg(static_cast<size_t>(cfg.num_queries) * dim);
  std::vector<double> pix(static_cast<size_t>(pixels) * dim);
  std::vector<double> table(static_cast<size_t>(cfg.k_values.back()) * dim);
  for (double& v : seg) v = normal(rng);
  for (double& v : pix) v = normal(rng);
  for (double& v : table) v = normal(rng);
  volatile double sink = 0.0;
  std::vector<HeadTiming> out;
  for (int k : cfg.k_values) {
    HeadTiming t;
    t.k = k;
    t.t_segment = TimeHead(seg, cfg.num_queries, table, k, dim,
                           cfg.repetitions, cfg.min_rep_seconds, sink);
    t.t_pixel = TimeHead(pix, pixels, table, k, dim, cfg.repetitions,
                         cfg.min_rep_seconds, sink);
    out.push_back(t);
  }
  return out;
}

double PixelSegmentSlopeRatio(const std::vector<HeadTiming>& rows) {
  ZS_CHECK(rows.size() >= 2, ErrorCode::kConfig,
           "slope needs at least two K values");
  const double dp = rows.back().t_pixel - rows.front().t_pixel;
  const double ds = rows.back().t_segment - rows.front().t_segment;
  ZS_CHECK(ds > 0.0, ErrorCode::kNumeric,
           "segment head timing did not grow with K");
  return dp / ds;
}

ClassSplit HoldOutSplit(const ClassSplit& split, int num_validation,
                        uint64_t seed,
                        const std::vector<std::string>& excluded) {
  std::vector<std::string> pool;
  for (const auto& name : split.seen)
    if (std::find(excluded.begin(), excluded.end(), name) == excluded.end())
      pool.push_back(name);
  ZS_CHECK(num_validation >= 1 &&
               num_validation < static_cast<int>(pool.size()),
           ErrorCode::kConfig,
           "validation classes must leave at least one seen class");
  auto rng = MakeRng(seed, {HashString("holdout")});
  std::shuffle(pool.begin(), pool.end(), rng);
  std::set<std::string> held(pool.begin(), pool.begin() + num_validation);
  ClassSplit out;
  out.mode = SplitMode::kGzs3;
  for (const auto& name : split.seen)
    (held.count(name) ? out.unseen : out.seen).push_back(name);
  return out;
}

GammaChoice SelectGamma(const std::vector<CalibrationItem>& items,
                        const SplitIndex& split,
                        const std::vector<double>& candidates) {
  ZS_CHECK(!candidates.empty(), ErrorCode::kConfig, "no gamma candidates");
  ZS_CHECK(split.mode == SplitMode::kGzs3, ErrorCode::kConfig,
           "gamma is selected in GZS3 mode");
  GammaChoice best;
  best.harmonic = -1.0;
  for (double g : candidates) {
    Confusion conf(split.num_classes);
    for (const auto& item : items) {
      const LabelMap pred =
          item.masks.empty()
              ? PixelProbabilityMap(item.pixel_probs, item.truth.height,
                                    item.truth.width, split, g)
              : SemanticMap(item.class_scores, item.masks, split, g);
      ConfusionAccumulate(pred, item.truth, conf);
    }
    const double h = MiouReport(conf, split).harmonic;
    best.harmonics.push_back(h);
    if (h > best.harmonic || (h == best.harmonic && g < best.gamma)) {
      best.harmonic = h;
      best.gamma = g;
    }
  }
  return best;
}

}  // namespace zegseg
