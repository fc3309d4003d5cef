// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odtq/rng.hpp"
#include "odtq/roadnet.hpp"

namespace odtq {

/// Time-varying generative ground truth per (edge, time slice): traversal
/// time medians via speed multipliers, dispersion via lognormal sigma.
struct CongestionProfile {
  double slice_len = 600.0;   // seconds per time slice
  double horizon = 7200.0;    // total generated wall-clock span
  double base_speed = 10.0;   // meters/second
  int n_slices = 12;
  std::vector<std::vector<double>> multiplier;   // [edge][slice], > 0
  std::vector<std::vector<double>> noise_scale;  // [edge][slice], >= 0
  std::vector<int> noise_group;                  // 0 = low, 1 = high

  int slice_index(double t) const {
    if (t < 0.0) return 0;
    int s = static_cast<int>(t / slice_len);
    return s >= n_slices ? n_slices - 1 : s;
  }
  // median traversal seconds for edge e entered in slice s
  double median_time(const RoadNetwork& net, int e, int s) const {
    return net.edge(e).length / (base_speed * multiplier[e][s]);
  }
};

enum class Split { kTrain = 0, kVal = 1, kCalib = 2, kTest = 3 };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct GeneratorConfig {
  int rows = 5;
  int cols = 5;
  double spacing = 100.0;      // meters between lattice neighbors
  double coord_jitter = 0.1;   // node displacement, fraction of spacing (<= 0.1)
  int max_nodes = 10000;
  int n_trips = 1000;
  double split_train = 0.6, split_val = 0.1, split_calib = 0.15, split_test = 0.15;
  double slice_len = 600.0;
  double horizon = 7200.0;
  double base_speed = 10.0;
  double multiplier_min = 0.7;
  double multiplier_max = 1.3;
  double congestion_wave = 0.3;     // relative amplitude of the per-slice wave
  std::string noise_mode = "uniform";  // uniform | split
  double noise_scale = 0.15;        // uniform mode sigma
  double noise_low = 0.05;          // split mode, left half
  double noise_high = 0.4;          // split mode, right half
  double path_epsilon = 0.3;        // shortest-path weight perturbation
  int min_hops = 3;                 // minimum OD hop distance
  double query_jitter = 0.2;        // query point offset, fraction of spacing
  uint64_t seed = 0;
};

struct Dataset {
  RoadNetwork net;
  CongestionProfile profile;  // generative truth; not serialized
  std::vector<Trip> trips;
  std::vector<OdtQuery> queries;  // queries[i] belongs to trips[i]
  std::vector<Split> split;

  std::vector<int> indices_of(Split s) const;
};

/// Bidirectional rows x cols lattice; node coordinates perturbed by at most
/// coord_jitter * spacing. Deterministic in seed.
RoadNetwork generate_grid_network(int rows, int cols, double spacing, uint64_t seed,
                                  double coord_jitter = 0.1, int max_nodes = 10000);

CongestionProfile make_profile(const RoadNetwork& net, const GeneratorConfig& cfg,
                               uint64_t seed);

/// One lognormal traversal-time draw with the given median and log-sigma.
double sample_edge_time(double median, double sigma, Rng& rng);

struct SimulatedTrip {
  Trip trip;
  Path path;
  bool operator==(const SimulatedTrip&) const = default;
};

/// Ground-truth path is the shortest-time path under per-edge weights
/// perturbed by U[1, 1+path_epsilon]; per-edge times are sampled
/// lognormally at the slice each edge is entered.
SimulatedTrip simulate_trip(const RoadNetwork& net, const CongestionProfile& profile,
                            const OdtQuery& query, uint64_t rng_seed,
                            double path_epsilon = 0.3);

Dataset build_dataset(const GeneratorConfig& cfg, int threads = 1);

void save_splits(const std::vector<Trip>& trips, const std::vector<Split>& split,
                 const std::string& path);
std::vector<Split> load_splits(const std::vector<Trip>& trips, const std::string& path);

/// Writes network.txt, trips.txt, queries.txt, splits.txt into dir.
void save_dataset(const Dataset& ds, const std::string& dir);
/// Loads the four files back; profile is not part of the serialized form.
Dataset load_dataset(const std::string& dir);

}  // namespace odtq
