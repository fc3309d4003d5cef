// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "odtq/roadnet.hpp"

namespace odtq::align {

struct AlignmentScores {
  int lcs_len = 0;        // common node count
  double lcs_norm = 0.0;  // lcs_len / |truth|
  double dtw_norm = 0.0;  // DTW cost in normalized coords / |truth|
};

/// Longest common subsequence length of two node-id sequences.
/// O(|a|*|b|) dynamic program.
int lcs(const Path& a, const Path& b);

/// Classic boundary-aligned DTW between the coordinate traces of two paths.
/// Per-step cost is the Euclidean distance in normalized coordinates; the
/// total alignment cost is divided by |b| (pass the ground truth as b).
double dtw(const Path& a, const Path& b, const RoadNetwork& net);

AlignmentScores score(const Path& pred, const Path& truth, const RoadNetwork& net);

/// Sequence-level reward: omega * lcs_norm - beta * dtw_norm. Equals omega
/// exactly when pred == truth.
double reward(const Path& pred, const Path& truth, const RoadNetwork& net,
              double omega, double beta);

}  // namespace odtq::align
