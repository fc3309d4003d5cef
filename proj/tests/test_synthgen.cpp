// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/synthgen.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "odtq/error.hpp"
#include "testutil.hpp"

using namespace odtq;

namespace {

GeneratorConfig tiny_config() {
  GeneratorConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.n_trips = 40;
  cfg.min_hops = 2;
  cfg.seed = 12;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// O(V^2) relaxation, independent of the heap-based implementation
std::vector<double> dijkstra_dist_oracle(const RoadNetwork& net, int src,
                                         const std::vector<double>& w) {
  int n = net.n_nodes();
  std::vector<double> dist(n, 1e300);
  std::vector<bool> done(n, false);
  dist[src] = 0.0;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int v = 0; v < n; ++v)
      if (!done[v] && (u < 0 || dist[v] < dist[u])) u = v;
    if (u < 0 || dist[u] >= 1e300) break;
    done[u] = true;
    const auto& nbr = net.out_neighbors(u);
    const auto& eid = net.out_edge_ids(u);
    for (size_t i = 0; i < nbr.size(); ++i)
      dist[nbr[i]] = std::min(dist[nbr[i]], dist[u] + w[eid[i]]);
  }
  return dist;
}

}  // namespace

TEST_CASE("generate_grid_network: lattice counts and determinism") {
  RoadNetwork g22 = generate_grid_network(2, 2, 100.0, 9);
  CHECK(g22.n_nodes() == 4);
  CHECK(g22.n_edges() == 8);

  RoadNetwork g33 = generate_grid_network(3, 3, 100.0, 9);
  CHECK(g33.n_nodes() == 9);
  CHECK(g33.n_edges() == 24);  // 12 undirected lattice edges, both directions

  RoadNetwork again = generate_grid_network(3, 3, 100.0, 9);
  for (int v = 0; v < 9; ++v) {
    CHECK(again.node(v).lng == g33.node(v).lng);
    CHECK(again.node(v).lat == g33.node(v).lat);
  }

  CHECK_THROWS_AS(generate_grid_network(200, 200, 100.0, 0), Error);  // max_nodes
  CHECK_THROWS_AS(generate_grid_network(1, 5, 100.0, 0), Error);
}

TEST_CASE("simulate_trip: zero noise is deterministic and conserves time") {
  GeneratorConfig cfg = tiny_config();
  cfg.noise_scale = 0.0;
  RoadNetwork net = generate_grid_network(cfg.rows, cfg.cols, cfg.spacing, 1);
  CongestionProfile profile = make_profile(net, cfg, 5);

  OdtQuery q;
  q.id = 0;
  q.lng_o = net.node(0).lng;
  q.lat_o = net.node(0).lat;
  q.lng_d = net.node(8).lng;
  q.lat_d = net.node(8).lat;
  q.departure = 900;

  SimulatedTrip sim = simulate_trip(net, profile, q, 77, 0.3);
  REQUIRE(is_valid_path(net, sim.path));
  double sum = 0.0;
  for (size_t i = 0; i + 1 < sim.path.nodes.size(); ++i) {
    int e = net.edge_between(sim.path.nodes[i], sim.path.nodes[i + 1]);
    int s = profile.slice_index(sim.trip.points[i].ts);
    sum += profile.median_time(net, e, s);
  }
  CHECK(sim.trip.travel_time() == doctest::Approx(sum).epsilon(1e-9));
}

TEST_CASE("simulate_trip: conservation holds with noise") {
  GeneratorConfig cfg = tiny_config();
  cfg.noise_scale = 0.4;
  RoadNetwork net = generate_grid_network(cfg.rows, cfg.cols, cfg.spacing, 2);
  CongestionProfile profile = make_profile(net, cfg, 6);
  OdtQuery q;
  q.lng_o = net.node(0).lng;
  q.lat_o = net.node(0).lat;
  q.lng_d = net.node(8).lng;
  q.lat_d = net.node(8).lat;
  q.departure = 100;
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    SimulatedTrip sim = simulate_trip(net, profile, q, seed, 0.3);
    double sum = 0.0;
    for (size_t i = 0; i + 1 < sim.trip.points.size(); ++i)
      sum += sim.trip.points[i + 1].ts - sim.trip.points[i].ts;
    CHECK(sim.trip.travel_time() == doctest::Approx(sum).epsilon(1e-12));
  }
  // different seeds produce different times
  double t1 = simulate_trip(net, profile, q, 10, 0.3).trip.travel_time();
  double t2 = simulate_trip(net, profile, q, 11, 0.3).trip.travel_time();
  CHECK(t1 != t2);
}

TEST_CASE("simulate_trip: epsilon=0 matches an independent Dijkstra oracle") {
  GeneratorConfig cfg;
  cfg.rows = 10;
  cfg.cols = 10;
  cfg.noise_scale = 0.0;
  RoadNetwork net = generate_grid_network(10, 10, 100.0, 21);
  CongestionProfile profile = make_profile(net, cfg, 22);

  OdtQuery q;
  q.lng_o = net.node(0).lng;
  q.lat_o = net.node(0).lat;
  q.lng_d = net.node(99).lng;
  q.lat_d = net.node(99).lat;
  q.departure = 1234;

  SimulatedTrip sim = simulate_trip(net, profile, q, 55, 0.0);
  int dep_slice = profile.slice_index(q.departure);
  std::vector<double> w(net.n_edges());
  for (int e = 0; e < net.n_edges(); ++e) w[e] = profile.median_time(net, e, dep_slice);
  auto dist = dijkstra_dist_oracle(net, 0, w);
  double path_cost = 0.0;
  for (size_t i = 0; i + 1 < sim.path.nodes.size(); ++i)
    path_cost += w[net.edge_between(sim.path.nodes[i], sim.path.nodes[i + 1])];
  CHECK(path_cost == doctest::Approx(dist[99]).epsilon(1e-9));
}

TEST_CASE("noise scale raises traversal-time variance") {
  // variance-ratio test at p < 0.01: with n = 1e4 per group the one-sided
  // critical value is about 1.034; the lognormal effect size is far larger
  Rng rng1(101), rng2(102);
  int n = 10000;
  double m1 = 0.0, m2 = 0.0;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = sample_edge_time(10.0, 0.1, rng1);
    b[i] = sample_edge_time(10.0, 0.3, rng2);
    m1 += a[i];
    m2 += b[i];
  }
  m1 /= n;
  m2 /= n;
  double v1 = 0.0, v2 = 0.0;
  for (int i = 0; i < n; ++i) {
    v1 += (a[i] - m1) * (a[i] - m1);
    v2 += (b[i] - m2) * (b[i] - m2);
  }
  v1 /= n - 1;
  v2 /= n - 1;
  CHECK(v2 / v1 > 1.034);
  CHECK(sample_edge_time(10.0, 0.0, rng1) == 10.0);
}

TEST_CASE("build_dataset: split counts, determinism, serialization") {
  GeneratorConfig cfg;
  cfg.rows = 4;
  cfg.cols = 4;
  cfg.n_trips = 1000;
  cfg.seed = 3;
  Dataset ds = build_dataset(cfg);
  CHECK(ds.indices_of(Split::kTrain).size() == 600);
  CHECK(ds.indices_of(Split::kVal).size() == 100);
  CHECK(ds.indices_of(Split::kCalib).size() == 150);
  CHECK(ds.indices_of(Split::kTest).size() == 150);

  SUBCASE("byte-identical serialization for the same seed") {
    std::string d1 = testutil::scratch_dir("synthgen_a");
    std::string d2 = testutil::scratch_dir("synthgen_b");
    save_dataset(ds, d1);
    save_dataset(build_dataset(cfg), d2);
    for (const char* f : {"network.txt", "trips.txt", "queries.txt", "splits.txt"})
      CHECK(slurp(d1 + "/" + f) == slurp(d2 + "/" + f));

    Dataset loaded = load_dataset(d1);
    CHECK(loaded.trips.size() == ds.trips.size());
    CHECK(loaded.split == ds.split);
  }

  SUBCASE("queries stay inside the bounding box and resolve to trip ends") {
    for (size_t i = 0; i < ds.queries.size(); ++i) {
      const OdtQuery& q = ds.queries[i];
      CHECK(ds.net.inside_bbox(q.lng_o, q.lat_o));
      CHECK(ds.net.inside_bbox(q.lng_d, q.lat_d));
      CHECK(nearest_node(ds.net, q.lng_o, q.lat_o) == ds.trips[i].points.front().node);
      CHECK(nearest_node(ds.net, q.lng_d, q.lat_d) == ds.trips[i].points.back().node);
    }
  }

  SUBCASE("invalid split fractions rejected") {
    cfg.split_train = 0.9;
    CHECK_THROWS_AS(build_dataset(cfg), Error);
  }
}

TEST_CASE("parallel trip simulation equals the single-threaded reference") {
  GeneratorConfig cfg = tiny_config();
  cfg.n_trips = 60;
  Dataset serial = build_dataset(cfg, 1);
  Dataset parallel = build_dataset(cfg, 4);
  REQUIRE(serial.trips.size() == parallel.trips.size());
  for (size_t i = 0; i < serial.trips.size(); ++i) {
    REQUIRE(serial.trips[i].points.size() == parallel.trips[i].points.size());
    for (size_t j = 0; j < serial.trips[i].points.size(); ++j) {
      CHECK(serial.trips[i].points[j].node == parallel.trips[i].points[j].node);
      CHECK(serial.trips[i].points[j].ts == parallel.trips[i].points[j].ts);
    }
  }
}

TEST_CASE("split-mode profile partitions edges by map half") {
  GeneratorConfig cfg = tiny_config();
  cfg.noise_mode = "split";
  cfg.noise_low = 0.01;
  cfg.noise_high = 0.5;
  RoadNetwork net = generate_grid_network(cfg.rows, cfg.cols, cfg.spacing, 4);
  CongestionProfile p = make_profile(net, cfg, 4);
  int low = 0, high = 0;
  for (int e = 0; e < net.n_edges(); ++e) {
    if (p.noise_group[e] == 0) {
      ++low;
      CHECK(p.noise_scale[e][0] == 0.01);
    } else {
      ++high;
      CHECK(p.noise_scale[e][0] == 0.5);
    }
  }
  CHECK(low > 0);
  CHECK(high > 0);
}
