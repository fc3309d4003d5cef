// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/align.hpp"

#include <doctest.h>

#include "odtq/error.hpp"
#include "odtq/rng.hpp"
#include "odtq/synthgen.hpp"
#include "testutil.hpp"

using namespace odtq;

namespace {

// straight-line network whose node coordinates we control exactly
RoadNetwork line_net(const std::vector<Vec2>& pts) {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  for (size_t i = 0; i < pts.size(); ++i)
    nodes.push_back({static_cast<int>(i), pts[i].x, pts[i].y});
  int eid = 0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    edges.push_back({eid++, static_cast<int>(i), static_cast<int>(i + 1), 1.0});
    edges.push_back({eid++, static_cast<int>(i + 1), static_cast<int>(i), 1.0});
  }
  return RoadNetwork::build(std::move(nodes), std::move(edges));
}

}  // namespace

TEST_CASE("lcs: examples and bruteforce") {
  CHECK(align::lcs(Path{{1, 2, 3, 4}}, Path{{1, 2, 3, 4}}) == 4);
  CHECK(align::lcs(Path{{1, 2, 3, 4}}, Path{{1, 3, 4, 5}}) == 3);
  CHECK(align::lcs(Path{{1, 2}}, Path{{3, 4}}) == 0);
  CHECK_THROWS_AS(align::lcs(Path{{}}, Path{{1}}), Error);

  SUBCASE("symmetry and identity") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
      Path a, b;
      int na = rng.uniform_int(1, 8), nb = rng.uniform_int(1, 8);
      for (int i = 0; i < na; ++i) a.nodes.push_back(rng.uniform_int(0, 5));
      for (int i = 0; i < nb; ++i) b.nodes.push_back(rng.uniform_int(0, 5));
      CHECK(align::lcs(a, b) == align::lcs(b, a));
      CHECK(align::lcs(a, a) == a.length());
      CHECK(align::lcs(a, b) == testutil::lcs_bruteforce(a.nodes, b.nodes));
    }
  }
}

TEST_CASE("dtw: worked example on exact coordinates") {
  SUBCASE("collapsed line, normalization rescales x") {
    // bbox [0, 0.2] x {0} collapses y; x maps to [0,1]
    RoadNetwork net = line_net({{0.0, 0.0}, {0.1, 0.0}, {0.2, 0.0}});
    // a = nodes (0,1) -> normalized x (0, 0.5); b = nodes (0,2) -> (0, 1.0)
    double d = align::dtw(Path{{0, 1}}, Path{{0, 2}}, net);
    CHECK(d == doctest::Approx(0.25).epsilon(1e-12));  // (0 + 0.5)/2
    CHECK(align::dtw(Path{{0, 1, 2}}, Path{{0, 1, 2}}, net) == 0.0);
    CHECK_THROWS_AS(align::dtw(Path{{0, 99}}, Path{{0}}, net), Error);
  }
  SUBCASE("unit bbox keeps the trace coordinates as-is") {
    // node 3 pins the bounding box to [0,1]^2, so normalized == raw
    RoadNetwork net = RoadNetwork::build(
        {{0, 0.0, 0.0}, {1, 0.1, 0.0}, {2, 0.2, 0.0}, {3, 1.0, 1.0}},
        {{0, 0, 1, 1.0}, {1, 1, 2, 1.0}, {2, 2, 3, 1.0}});
    double d = align::dtw(Path{{0, 1}}, Path{{0, 2}}, net);
    CHECK(d == doctest::Approx(0.05).epsilon(1e-12));  // (0 + 0.1)/2
  }
}

TEST_CASE("dtw equals exhaustive alignment enumeration") {
  RoadNetwork net = generate_grid_network(4, 4, 100.0, 11);
  Rng rng(23);
  for (int t = 0; t < 300; ++t) {
    Path a, b;
    int na = rng.uniform_int(1, 8), nb = rng.uniform_int(1, 8);
    for (int i = 0; i < na; ++i) a.nodes.push_back(rng.uniform_int(0, net.n_nodes() - 1));
    for (int i = 0; i < nb; ++i) b.nodes.push_back(rng.uniform_int(0, net.n_nodes() - 1));
    std::vector<Vec2> pa, pb;
    for (int v : a.nodes) pa.push_back(net.normalized_node(v));
    for (int v : b.nodes) pb.push_back(net.normalized_node(v));
    double got = align::dtw(a, b, net);
    double want = testutil::dtw_bruteforce(pa, pb);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("reward: perfect match, disjoint, term isolation") {
  RoadNetwork net = generate_grid_network(3, 3, 100.0, 2);
  Path truth{{0, 1, 2, 5}};
  SUBCASE("pred == truth gives exactly omega") {
    CHECK(align::reward(truth, truth, net, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(align::reward(truth, truth, net, 2.5, 7.0) == doctest::Approx(2.5));
  }
  SUBCASE("disjoint straight lines score negative") {
    Path pred{{6, 7, 8}};
    CHECK(align::reward(pred, truth, net, 1.0, 1.0) < 0.0);
  }
  SUBCASE("omega = 0 isolates the dtw term") {
    Path pred{{0, 3, 6}};
    double r = align::reward(pred, truth, net, 0.0, 2.0);
    CHECK(r == doctest::Approx(-2.0 * align::dtw(pred, truth, net)));
  }
  SUBCASE("reward is maximized only at the truth") {
    Rng rng(31);
    double best = align::reward(truth, truth, net, 1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
      Path pred;
      int n = rng.uniform_int(1, 6);
      for (int i = 0; i < n; ++i)
        pred.nodes.push_back(rng.uniform_int(0, net.n_nodes() - 1));
      if (pred == truth) continue;
      CHECK(align::reward(pred, truth, net, 1.0, 1.0) < best);
    }
  }
}
