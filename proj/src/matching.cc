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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "zegseg/error.h"
#include "zegseg/training.h"

namespace zegseg {

namespace {

// Square assignment with potentials (rows = padded segments, cols = queries).
// After Solve(), row i is matched to col row_match[i] and the reduced costs
// c[i][j] - u[i] - v[j] are >= 0, zero on matched pairs.
struct SquareHungarian {
  int n = 0;
  std::vector<double> c;  // n x n
  std::vector<double> u, v;
  std::vector<int> row_match, col_match;

  double cost(int i, int j) const { return c[static_cast<size_t>(i) * n + j]; }

  void Solve() {
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays in the classic shortest-augmenting-path formulation.
    std::vector<double> uu(n + 1, 0.0), vv(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
      p[0] = i;
      int j0 = 0;
      std::vector<double> minv(n + 1, inf);
      std::vector<char> used(n + 1, 0);
      do {
        used[j0] = 1;
        const int i0 = p[j0];
        double delta = inf;
        int j1 = 0;
        for (int j = 1; j <= n; ++j) {
          if (used[j]) continue;
          const double cur = cost(i0 - 1, j - 1) - uu[i0] - vv[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
        for (int j = 0; j <= n; ++j) {
          if (used[j]) {
            uu[p[j]] += delta;
            vv[j] -= delta;
          } else {
            minv[j] -= delta;
          }
        }
        j0 = j1;
      } while (p[j0] != 0);
      do {
        const int j1 = way[j0];
        p[j0] = p[j1];
        j0 = j1;
      } while (j0);
    }
    u.assign(uu.begin() + 1, uu.end());
    v.assign(vv.begin() + 1, vv.end());
    row_match.assign(n, -1);
    col_match.assign(n, -1);
    for (int j = 1; j <= n; ++j) {
      row_match[p[j] - 1] = j - 1;
      col_match[j - 1] = p[j] - 1;
    }
  }
};

}  // namespace

Assignment HungarianMatch(const ad::Matrix& cost) {
  const int num_queries = cost.rows;
  const int num_segments = cost.cols;
  ZS_CHECK(num_queries >= num_segments, ErrorCode::kInfeasibleMatching,
           "fewer queries than ground-truth segments");
  if (num_segments == 0) return {};
  double scale = 0.0;
  for (double x : cost.v) {
    ZS_CHECK(std::isfinite(x), ErrorCode::kNumeric,
             "non-finite entry in matching cost matrix");
    scale = std::max(scale, std::abs(x));
  }

  // Segments are rows; dummy zero-cost rows pad to a square problem.
  SquareHungarian h;
  h.n = num_queries;
  h.c.assign(static_cast<size_t>(h.n) * h.n, 0.0);
  for (int m = 0; m < num_segments; ++m)
    for (int q = 0; q < num_queries; ++q)
      h.c[static_cast<size_t>(m) * h.n + q] = cost(q, m);
  h.Solve();

  // Any optimal assignment uses only edges that are tight under the optimal
  // potentials, so the lexicographic search can stay inside that subgraph.
  const double tol = 1e-9 * (1.0 + scale);
  const int n = h.n;
  auto tight = [&](int i, int j) {
    return h.cost(i, j) - h.u[i] - h.v[j] <= tol;
  };

  std::vector<char> row_fixed(n, 0), col_fixed(n, 0);
  std::vector<int>& rm = h.row_match;
  std::vector<int>& cm = h.col_match;

  // Alternating path from row `start` to column `target` through tight
  // edges, avoiding fixed rows/cols and `banned_col`. Rewires the matching
  // along the path on success.
  auto reroute = [&](int start, int target, int banned_row, int banned_col) {
    std::vector<int> parent_col(n, -1);  // col -> row that reached it
    std::vector<char> seen_col(n, 0);
    std::vector<int> queue{start};
    std::vector<char> seen_row(n, 0);
    seen_row[start] = 1;
    for (size_t head = 0; head < queue.size(); ++head) {
      const int r = queue[head];
      for (int j = 0; j < n; ++j) {
        if (seen_col[j] || col_fixed[j] || j == banned_col || !tight(r, j))
          continue;
        seen_col[j] = 1;
        parent_col[j] = r;
        if (j == target) {
          // Walk back: each row on the path takes the column it reached.
          int col = j;
          while (true) {
            const int row = parent_col[col];
            const int prev = rm[row];
            rm[row] = col;
            cm[col] = row;
            if (row == start) break;
            col = prev;
          }
          return true;
        }
        const int next = cm[j];
        if (next >= 0 && !seen_row[next] && !row_fixed[next] &&
            next != banned_row) {
          seen_row[next] = 1;
          queue.push_back(next);
        }
      }
    }
    return false;
  };

  for (int m = 0; m < num_segments; ++m) {
    for (int q = 0; q < n; ++q) {
      if (col_fixed[q]) continue;
      if (rm[m] == q) break;
      if (!tight(m, q)) continue;
      const int other = cm[q];
      const int freed = rm[m];
      // Row `other` must move onto some column so that `freed` gets used.
      if (reroute(other, freed, m, q)) {
        rm[m] = q;
        cm[q] = m;
        break;
      }
    }
    row_fixed[m] = 1;
    col_fixed[rm[m]] = 1;
  }

  Assignment out;
  for (int m = 0; m < num_segments; ++m) out.emplace_back(rm[m], m);
  std::sort(out.begin(), out.end());
  return out;
}

double AssignmentCost(const ad::Matrix& cost, const Assignment& assignment) {
  std::vector<std::pair<int, int>> by_segment;
  for (auto [q, m] : assignment) by_segment.emplace_back(m, q);
  std::sort(by_segment.begin(), by_segment.end());
  double total = 0.0;
  for (auto [m, q] : by_segment) total += cost(q, m);
  return total;
}

}  // namespace zegseg
