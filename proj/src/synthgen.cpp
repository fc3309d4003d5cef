// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "odtq/error.hpp"
#include "odtq/parallel.hpp"

namespace odtq {

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kCalib: return "calib";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "calib") return Split::kCalib;
  if (name == "test") return Split::kTest;
  fail(ErrorCode::kParse, "unknown split label '" + name + "'");
}

std::vector<int> Dataset::indices_of(Split s) const {
  std::vector<int> out;
  for (size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(static_cast<int>(i));
  return out;
}

RoadNetwork generate_grid_network(int rows, int cols, double spacing, uint64_t seed,
                                  double coord_jitter, int max_nodes) {
  if (rows < 2 || cols < 2)
    fail(ErrorCode::kContract, "grid needs rows >= 2 and cols >= 2");
  if (static_cast<long long>(rows) * cols > max_nodes)
    fail(ErrorCode::kValidation,
         "grid size " + std::to_string(static_cast<long long>(rows) * cols) +
             " exceeds max_nodes " + std::to_string(max_nodes));
  if (!(spacing > 0.0)) fail(ErrorCode::kContract, "spacing must be > 0");

  Rng rng(mix_seed(seed, "grid-coords"));
  std::vector<Node> nodes;
  nodes.reserve(static_cast<size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Node v;
      v.id = r * cols + c;
      v.lng = c * spacing + rng.uniform(-coord_jitter, coord_jitter) * spacing;
      v.lat = r * spacing + rng.uniform(-coord_jitter, coord_jitter) * spacing;
      nodes.push_back(v);
    }
  }
  auto dist = [&](int a, int b) {
    double dx = nodes[a].lng - nodes[b].lng;
    double dy = nodes[a].lat - nodes[b].lat;
    return std::sqrt(dx * dx + dy * dy);
  };
  std::vector<Edge> edges;
  int eid = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int u = r * cols + c;
      if (c + 1 < cols) {
        int v = u + 1;
        double len = dist(u, v);
        edges.push_back({eid++, u, v, len});
        edges.push_back({eid++, v, u, len});
      }
      if (r + 1 < rows) {
        int v = u + cols;
        double len = dist(u, v);
        edges.push_back({eid++, u, v, len});
        edges.push_back({eid++, v, u, len});
      }
    }
  }
  return RoadNetwork::build(std::move(nodes), std::move(edges));
}

CongestionProfile make_profile(const RoadNetwork& net, const GeneratorConfig& cfg,
                               uint64_t seed) {
  if (!(cfg.slice_len > 0.0) || !(cfg.horizon >= cfg.slice_len))
    fail(ErrorCode::kConfig, "horizon must cover at least one slice");
  if (!(cfg.base_speed > 0.0)) fail(ErrorCode::kConfig, "base_speed must be > 0");
  if (!(cfg.multiplier_min > 0.0) || cfg.multiplier_max < cfg.multiplier_min)
    fail(ErrorCode::kConfig, "multiplier range invalid");
  if (cfg.congestion_wave < 0.0 || cfg.congestion_wave >= 1.0)
    fail(ErrorCode::kConfig, "congestion_wave must be in [0, 1)");
  if (cfg.noise_mode != "uniform" && cfg.noise_mode != "split")
    fail(ErrorCode::kConfig, "noise_mode must be 'uniform' or 'split'");

  CongestionProfile p;
  p.slice_len = cfg.slice_len;
  p.horizon = cfg.horizon;
  p.base_speed = cfg.base_speed;
  p.n_slices = static_cast<int>(cfg.horizon / cfg.slice_len);

  Rng rng(mix_seed(seed, "profile"));
  int m = net.n_edges();
  p.multiplier.assign(m, std::vector<double>(p.n_slices, 1.0));
  p.noise_scale.assign(m, std::vector<double>(p.n_slices, 0.0));
  p.noise_group.assign(m, 0);
  for (int e = 0; e < m; ++e) {
    double base = rng.uniform(cfg.multiplier_min, cfg.multiplier_max);
    double phase = rng.uniform(0.0, 2.0 * M_PI);
    double sigma;
    if (cfg.noise_mode == "uniform") {
      sigma = cfg.noise_scale;
    } else {
      // split by edge midpoint: left half of the map is the low-noise group
      Vec2 a = net.normalized_node(net.edge(e).from);
      Vec2 b = net.normalized_node(net.edge(e).to);
      bool high = 0.5 * (a.x + b.x) >= 0.5;
      p.noise_group[e] = high ? 1 : 0;
      sigma = high ? cfg.noise_high : cfg.noise_low;
    }
    if (sigma < 0.0) fail(ErrorCode::kConfig, "noise scale must be >= 0");
    for (int s = 0; s < p.n_slices; ++s) {
      double wave = 1.0 + cfg.congestion_wave *
                              std::sin(2.0 * M_PI * s / p.n_slices + phase);
      p.multiplier[e][s] = base * wave;
      p.noise_scale[e][s] = sigma;
    }
  }
  return p;
}

double sample_edge_time(double median, double sigma, Rng& rng) {
  if (sigma == 0.0) return median;
  return median * std::exp(sigma * rng.normal());
}

SimulatedTrip simulate_trip(const RoadNetwork& net, const CongestionProfile& profile,
                            const OdtQuery& query, uint64_t rng_seed,
                            double path_epsilon) {
  int origin = nearest_node(net, query.lng_o, query.lat_o);
  int dest = nearest_node(net, query.lng_d, query.lat_d);
  if (origin == dest)
    fail(ErrorCode::kContract, "query " + std::to_string(query.id) +
                                   " maps origin and destination to the same node");

  Rng rng(rng_seed);
  int dep_slice = profile.slice_index(query.departure);
  std::vector<double> weights(net.n_edges());
  for (int e = 0; e < net.n_edges(); ++e)
    weights[e] = profile.median_time(net, e, dep_slice) *
                 rng.uniform(1.0, 1.0 + path_epsilon);

  Path path = dijkstra_path(net, origin, dest, weights);
  if (path.nodes.empty())
    fail(ErrorCode::kValidation, "destination node " + std::to_string(dest) +
                                     " unreachable from " + std::to_string(origin));

  SimulatedTrip out;
  out.path = path;
  out.trip.id = query.id;
  double t = query.departure;
  out.trip.points.push_back({path.nodes[0], t});
  for (size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    int e = net.edge_between(path.nodes[i], path.nodes[i + 1]);
    int s = profile.slice_index(t);
    double dt = sample_edge_time(profile.median_time(net, e, s),
                                 profile.noise_scale[e][s], rng);
    t += dt;
    out.trip.points.push_back({path.nodes[i + 1], t});
  }
  return out;
}

namespace {

// cumulative-rounding split boundaries; counts sum exactly to n
std::vector<int> split_boundaries(int n, const GeneratorConfig& cfg) {
  double f1 = cfg.split_train, f2 = cfg.split_val, f3 = cfg.split_calib,
         f4 = cfg.split_test;
  if (f1 < 0 || f2 < 0 || f3 < 0 || f4 < 0 ||
      std::abs(f1 + f2 + f3 + f4 - 1.0) > 1e-9)
    fail(ErrorCode::kConfig, "split fractions must be non-negative and sum to 1");
  std::vector<int> b(4);
  b[0] = static_cast<int>(std::llround(n * f1));
  b[1] = static_cast<int>(std::llround(n * (f1 + f2)));
  b[2] = static_cast<int>(std::llround(n * (f1 + f2 + f3)));
  b[3] = n;
  return b;
}

}  // namespace

Dataset build_dataset(const GeneratorConfig& cfg, int threads) {
  if (cfg.n_trips <= 0) fail(ErrorCode::kConfig, "n_trips must be > 0");
  if (cfg.min_hops < 1) fail(ErrorCode::kConfig, "min_hops must be >= 1");
  if (cfg.query_jitter < 0.0 || cfg.query_jitter > 0.4)
    fail(ErrorCode::kConfig, "query_jitter must be in [0, 0.4]");
  if (cfg.path_epsilon < 0.0) fail(ErrorCode::kConfig, "path_epsilon must be >= 0");
  if (cfg.coord_jitter < 0.0 || cfg.coord_jitter > 0.1)
    fail(ErrorCode::kConfig, "coord_jitter must be in [0, 0.1]");

  Dataset ds;
  ds.net = generate_grid_network(cfg.rows, cfg.cols, cfg.spacing,
                                 mix_seed(cfg.seed, "net"), cfg.coord_jitter,
                                 cfg.max_nodes);
  ds.profile = make_profile(ds.net, cfg, mix_seed(cfg.seed, "congestion"));

  int n = cfg.n_trips;
  ds.queries.assign(n, {});
  ds.trips.assign(n, {});
  std::vector<SimulatedTrip> sims(n);

  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(cfg.seed, "query", static_cast<uint64_t>(i)));
    int origin = -1, dest = -1;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000)
        fail(ErrorCode::kConfig,
             "no origin/destination pair reaches min_hops=" +
                 std::to_string(cfg.min_hops) + " on this network");
      origin = rng.uniform_int(0, ds.net.n_nodes() - 1);
      dest = rng.uniform_int(0, ds.net.n_nodes() - 1);
      if (origin == dest) continue;
      int hops = bfs_hops(ds.net, origin, dest);
      if (hops >= cfg.min_hops) break;
    }
    auto jitter_point = [&](int v) {
      const Node& nd = ds.net.node(v);
      double lng = nd.lng + rng.uniform(-1.0, 1.0) * cfg.query_jitter * cfg.spacing;
      double lat = nd.lat + rng.uniform(-1.0, 1.0) * cfg.query_jitter * cfg.spacing;
      // keep query points inside the network bounding box
      lng = std::clamp(lng, ds.net.min_lng(), ds.net.max_lng());
      lat = std::clamp(lat, ds.net.min_lat(), ds.net.max_lat());
      return std::pair<double, double>(lng, lat);
    };
    OdtQuery q;
    q.id = i;
    std::tie(q.lng_o, q.lat_o) = jitter_point(origin);
    std::tie(q.lng_d, q.lat_d) = jitter_point(dest);
    // jitter must not change the nearest node, or the trip would not match
    // the query; retry with the raw coordinates if it does
    if (nearest_node(ds.net, q.lng_o, q.lat_o) != origin) {
      q.lng_o = ds.net.node(origin).lng;
      q.lat_o = ds.net.node(origin).lat;
    }
    if (nearest_node(ds.net, q.lng_d, q.lat_d) != dest) {
      q.lng_d = ds.net.node(dest).lng;
      q.lat_d = ds.net.node(dest).lat;
    }
    q.departure = std::floor(rng.uniform(0.0, cfg.horizon));
    ds.queries[i] = q;
  }

  parallel_for(static_cast<size_t>(n), threads, [&](size_t i) {
    sims[i] = simulate_trip(ds.net, ds.profile, ds.queries[i],
                            mix_seed(cfg.seed, "trip", static_cast<uint64_t>(i)),
                            cfg.path_epsilon);
  });
  for (int i = 0; i < n; ++i) ds.trips[i] = std::move(sims[i].trip);

  auto b = split_boundaries(n, cfg);
  ds.split.assign(n, Split::kTrain);
  for (int i = 0; i < n; ++i) {
    if (i < b[0]) ds.split[i] = Split::kTrain;
    else if (i < b[1]) ds.split[i] = Split::kVal;
    else if (i < b[2]) ds.split[i] = Split::kCalib;
    else ds.split[i] = Split::kTest;
  }
  return ds;
}

void save_splits(const std::vector<Trip>& trips, const std::vector<Split>& split,
                 const std::string& path) {
  if (trips.size() != split.size())
    fail(ErrorCode::kContract, "splits size mismatch");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  for (size_t i = 0; i < trips.size(); ++i)
    out << trips[i].id << ' ' << split_name(split[i]) << "\n";
}

std::vector<Split> load_splits(const std::vector<Trip>& trips, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::map<long long, Split> by_id;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long id;
    std::string label;
    if (!(ss >> id >> label))
      fail(ErrorCode::kParse, path + ":" + std::to_string(lineno) +
                                  ": expected '<trip_id> <split>'");
    by_id[id] = parse_split(label);
  }
  std::vector<Split> out;
  out.reserve(trips.size());
  for (const Trip& t : trips) {
    auto it = by_id.find(t.id);
    if (it == by_id.end())
      fail(ErrorCode::kValidation,
           "trip " + std::to_string(t.id) + " missing from " + path);
    out.push_back(it->second);
  }
  return out;
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset ds;
  ds.net = load_network((fs::path(dir) / "network.txt").string());
  ds.trips = load_trips((fs::path(dir) / "trips.txt").string());
  ds.queries = load_queries((fs::path(dir) / "queries.txt").string());
  if (ds.queries.size() != ds.trips.size())
    fail(ErrorCode::kValidation, "trips and queries files disagree on count");
  ds.split = load_splits(ds.trips, (fs::path(dir) / "splits.txt").string());
  for (const Trip& t : ds.trips)
    if (!is_valid_path(ds.net, t.path()))
      fail(ErrorCode::kValidation,
           "trip " + std::to_string(t.id) + " is not a valid path");
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  save_network(ds.net, (fs::path(dir) / "network.txt").string());
  save_trips(ds.trips, (fs::path(dir) / "trips.txt").string());
  save_queries(ds.queries, (fs::path(dir) / "queries.txt").string());
  save_splits(ds.trips, ds.split, (fs::path(dir) / "splits.txt").string());
}

}  // namespace odtq
