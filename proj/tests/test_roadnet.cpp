// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/roadnet.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "odtq/error.hpp"
#include "odtq/synthgen.hpp"
#include "testutil.hpp"

using namespace odtq;

namespace {

std::string write_file(const std::string& dir, const std::string& name,
                       const std::string& content) {
  std::string path = dir + "/" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("load_network: minimal two-node file") {
  std::string dir = testutil::scratch_dir("roadnet_min");
  std::string path = write_file(dir, "net.txt",
                                "#nodes 2 #edges 1\n"
                                "0 0.0 0.0\n"
                                "1 100.0 0.0\n"
                                "0 0 1 100.0\n");
  RoadNetwork net = load_network(path);
  CHECK(net.n_nodes() == 2);
  CHECK(net.n_edges() == 1);
  CHECK(net.edge(0).from == 0);
  CHECK(net.edge(0).to == 1);
}

TEST_CASE("load_network: dangling edge endpoint is a validation error") {
  std::string dir = testutil::scratch_dir("roadnet_dangling");
  std::string path = write_file(dir, "net.txt",
                                "#nodes 5 #edges 1\n"
                                "0 0 0\n1 1 0\n2 2 0\n3 3 0\n4 4 0\n"
                                "0 0 99 1.0\n");
  CHECK_THROWS_WITH_AS(load_network(path), doctest::Contains("references unknown node"),
                       Error);
}

TEST_CASE("load_network: malformed record names the line") {
  std::string dir = testutil::scratch_dir("roadnet_malformed");
  std::string path = write_file(dir, "net.txt",
                                "#nodes 2 #edges 1\n"
                                "0 0.0 0.0\n"
                                "1 oops 0.0\n"
                                "0 0 1 100.0\n");
  CHECK_THROWS_WITH_AS(load_network(path), doctest::Contains(":3"), Error);
}

TEST_CASE("load_network: non-positive edge length rejected") {
  std::string dir = testutil::scratch_dir("roadnet_len");
  std::string path = write_file(dir, "net.txt",
                                "#nodes 2 #edges 1\n0 0 0\n1 1 0\n0 0 1 0.0\n");
  CHECK_THROWS_AS(load_network(path), Error);
}

TEST_CASE("save/load round trip preserves structure byte-for-byte") {
  RoadNetwork net = generate_grid_network(10, 10, 100.0, 42);
  std::string dir = testutil::scratch_dir("roadnet_roundtrip");
  std::string p1 = dir + "/a.txt";
  std::string p2 = dir + "/b.txt";
  save_network(net, p1);
  RoadNetwork reloaded = load_network(p1);
  save_network(reloaded, p2);

  CHECK(reloaded.n_nodes() == net.n_nodes());
  CHECK(reloaded.n_edges() == net.n_edges());
  for (int e = 0; e < net.n_edges(); ++e) {
    CHECK(reloaded.edge(e).from == net.edge(e).from);
    CHECK(reloaded.edge(e).to == net.edge(e).to);
  }
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("nearest_node: exact hit, tie break, brute-force scan") {
  RoadNetwork net = generate_grid_network(10, 10, 100.0, 3);
  SUBCASE("point on a node") {
    const Node& n7 = net.node(7);
    CHECK(nearest_node(net, n7.lng, n7.lat) == 7);
  }
  SUBCASE("equidistant tie goes to the smaller id") {
    // symmetric two-node net, query in the middle
    RoadNetwork tiny = RoadNetwork::build(
        {{0, 0.0, 0.0}, {1, 0.0, 2.0}, {2, 1.0, 1.0}},
        {{0, 0, 2, 1.0}, {1, 2, 1, 1.0}});
    CHECK(nearest_node(tiny, 0.0, 1.0) == 0);  // ties 0 vs 1
  }
  SUBCASE("random points match exhaustive scan") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
      double lng = rng.uniform(net.min_lng(), net.max_lng());
      double lat = rng.uniform(net.min_lat(), net.max_lat());
      Vec2 p = net.normalized(lng, lat);
      int best = -1;
      double best_d = 1e300;
      for (int v = 0; v < net.n_nodes(); ++v) {
        double d = distance(p, net.normalized_node(v));
        if (d < best_d) {
          best_d = d;
          best = v;
        }
      }
      CHECK(nearest_node(net, lng, lat) == best);
    }
  }
}

TEST_CASE("out_neighbors: grid interior, sink, chain") {
  SUBCASE("interior node of a grid has 4 ascending neighbors") {
    RoadNetwork net = generate_grid_network(5, 5, 100.0, 0);
    int v = 2 * 5 + 2;  // center
    auto nbr = net.out_neighbors(v);
    REQUIRE(nbr.size() == 4);
    CHECK(std::is_sorted(nbr.begin(), nbr.end()));
    // enumerate lattice edges independently
    std::vector<int> expected = {v - 5, v - 1, v + 1, v + 5};
    CHECK(nbr == expected);
  }
  SUBCASE("sink node") {
    RoadNetwork net = RoadNetwork::build({{0, 0, 0}, {1, 1, 0}}, {{0, 0, 1, 1.0}});
    CHECK(net.out_neighbors(1).empty());
    CHECK(net.out_neighbors(0) == std::vector<int>{1});
  }
  SUBCASE("invalid node id") {
    RoadNetwork net = RoadNetwork::build({{0, 0, 0}, {1, 1, 0}}, {{0, 0, 1, 1.0}});
    CHECK_THROWS_AS(net.out_neighbors(5), Error);
  }
}

TEST_CASE("path validation requires adjacency") {
  RoadNetwork net = generate_grid_network(3, 3, 100.0, 1);
  CHECK(is_valid_path(net, Path{{0, 1, 2}}));
  CHECK_FALSE(is_valid_path(net, Path{{0, 2}}));    // skips a node
  CHECK_FALSE(is_valid_path(net, Path{{0}}));       // degenerate
  CHECK_FALSE(is_valid_path(net, Path{{0, 99}}));   // unknown node
}

TEST_CASE("trips and queries files round trip") {
  std::string dir = testutil::scratch_dir("roadnet_tripio");
  std::vector<Trip> trips;
  Trip t;
  t.id = 3;
  t.points = {{0, 1000.0}, {1, 1012.0}, {4, 1030.0}};
  trips.push_back(t);
  std::string tp = dir + "/trips.txt";
  save_trips(trips, tp);
  auto loaded = load_trips(tp);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].id == 3);
  CHECK(loaded[0].points.size() == 3);
  CHECK(loaded[0].travel_time() == doctest::Approx(30.0));

  std::vector<OdtQuery> queries;
  OdtQuery q;
  q.id = 1;
  q.lng_o = 10.5;
  q.lat_o = 20.25;
  q.lng_d = 30.0;
  q.lat_d = 40.0;
  q.departure = 3600;
  queries.push_back(q);
  std::string qp = dir + "/queries.txt";
  save_queries(queries, qp);
  auto qs = load_queries(qp);
  REQUIRE(qs.size() == 1);
  CHECK(qs[0].lng_o == doctest::Approx(10.5));
  CHECK(qs[0].departure == doctest::Approx(3600));
}

TEST_CASE("trips file rejects decreasing timestamps") {
  std::string dir = testutil::scratch_dir("roadnet_badtrip");
  std::string path = write_file(dir, "trips.txt", "0;0:100,1:90\n");
  CHECK_THROWS_AS(load_trips(path), Error);
}

TEST_CASE("dijkstra and bfs agree on unit weights") {
  RoadNetwork net = generate_grid_network(6, 6, 100.0, 5);
  std::vector<double> unit(net.n_edges(), 1.0);
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    int a = rng.uniform_int(0, net.n_nodes() - 1);
    int b = rng.uniform_int(0, net.n_nodes() - 1);
    if (a == b) continue;
    Path p = dijkstra_path(net, a, b, unit);
    REQUIRE(is_valid_path(net, p));
    CHECK(p.length() - 1 == bfs_hops(net, a, b));
  }
}
