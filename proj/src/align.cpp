// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/align.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "odtq/error.hpp"

namespace odtq::align {

int lcs(const Path& a, const Path& b) {
  if (a.nodes.empty() || b.nodes.empty())
    fail(ErrorCode::kContract, "lcs requires non-empty paths");
  size_t n = a.nodes.size(), m = b.nodes.size();
  // two-row DP
  std::vector<int> prev(m + 1, 0), cur(m + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      if (a.nodes[i - 1] == b.nodes[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double dtw(const Path& a, const Path& b, const RoadNetwork& net) {
  if (a.nodes.empty() || b.nodes.empty())
    fail(ErrorCode::kContract, "dtw requires non-empty paths");
  size_t n = a.nodes.size(), m = b.nodes.size();
  std::vector<Vec2> pa(n), pb(m);
  for (size_t i = 0; i < n; ++i) pa[i] = net.normalized_node(a.nodes[i]);
  for (size_t j = 0; j < m; ++j) pb[j] = net.normalized_node(b.nodes[j]);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, inf), cur(m, inf);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < m; ++j) {
      double c = distance(pa[i], pb[j]);
      double best;
      if (i == 0 && j == 0)
        best = 0.0;
      else if (i == 0)
        best = cur[j - 1];
      else if (j == 0)
        best = prev[j];
      else
        best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = c + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1] / static_cast<double>(m);
}

AlignmentScores score(const Path& pred, const Path& truth, const RoadNetwork& net) {
  AlignmentScores s;
  s.lcs_len = lcs(pred, truth);
  s.lcs_norm = static_cast<double>(s.lcs_len) / static_cast<double>(truth.length());
  s.dtw_norm = dtw(pred, truth, net);
  return s;
}

double reward(const Path& pred, const Path& truth, const RoadNetwork& net,
              double omega, double beta) {
  AlignmentScores s = score(pred, truth, net);
  return omega * s.lcs_norm - beta * s.dtw_norm;
}

}  // namespace odtq::align
