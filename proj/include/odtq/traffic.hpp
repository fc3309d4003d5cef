// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "odtq/roadnet.hpp"

namespace odtq {

struct Traversal {
  double entry = 0.0;     // entry timestamp, seconds
  double duration = 0.0;  // traversal seconds
};

/// Per-edge index of observed traversals. Built from the training split
/// only: every consumer queries strictly-before-departure windows, so no
/// future or held-out information can leak into features.
class TripsIndex {
 public:
  TripsIndex(const RoadNetwork& net, const std::vector<Trip>& trips);

  /// Traversals of edge e with entry timestamp in [t_begin, t_end).
  std::vector<Traversal> in_window(int edge, double t_begin, double t_end) const;

  /// Mean traversal seconds of edge e over [t_begin, t_end); 0 when the
  /// window holds no observation.
  double mean_in_window(int edge, double t_begin, double t_end) const;

  int n_edges() const { return static_cast<int>(by_edge_.size()); }

 private:
  std::vector<std::vector<Traversal>> by_edge_;  // sorted by entry
};

}  // namespace odtq
