// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/traffic.hpp"

#include <algorithm>

#include "odtq/error.hpp"

namespace odtq {

TripsIndex::TripsIndex(const RoadNetwork& net, const std::vector<Trip>& trips) {
  by_edge_.assign(net.n_edges(), {});
  for (const Trip& t : trips) {
    for (size_t i = 0; i + 1 < t.points.size(); ++i) {
      int e = net.edge_between(t.points[i].node, t.points[i + 1].node);
      if (e < 0)
        fail(ErrorCode::kValidation, "trip " + std::to_string(t.id) +
                                         " contains a non-adjacent step");
      by_edge_[e].push_back({t.points[i].ts, t.points[i + 1].ts - t.points[i].ts});
    }
  }
  for (auto& v : by_edge_)
    std::sort(v.begin(), v.end(),
              [](const Traversal& a, const Traversal& b) { return a.entry < b.entry; });
}

std::vector<Traversal> TripsIndex::in_window(int edge, double t_begin,
                                             double t_end) const {
  if (edge < 0 || edge >= n_edges())
    fail(ErrorCode::kContract, "edge id " + std::to_string(edge) + " out of range");
  const auto& v = by_edge_[edge];
  auto lo = std::lower_bound(v.begin(), v.end(), t_begin,
                             [](const Traversal& t, double x) { return t.entry < x; });
  auto hi = std::lower_bound(v.begin(), v.end(), t_end,
                             [](const Traversal& t, double x) { return t.entry < x; });
  return std::vector<Traversal>(lo, hi);
}

double TripsIndex::mean_in_window(int edge, double t_begin, double t_end) const {
  auto w = in_window(edge, t_begin, t_end);
  if (w.empty()) return 0.0;
  double sum = 0.0;
  for (const Traversal& t : w) sum += t.duration;
  return sum / static_cast<double>(w.size());
}

}  // namespace odtq
