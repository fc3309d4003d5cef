// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace odtq {

struct Node {
  int id = 0;
  double lng = 0.0;
  double lat = 0.0;
};

struct Edge {
  int id = 0;
  int from = 0;
  int to = 0;
  double length = 0.0;  // meters, > 0
};

struct Vec2 {
  double x = 0.0;  // lng axis
  double y = 0.0;  // lat axis
};

/// Directed road graph. Immutable after construction; node ids are dense
/// 0..n-1 and adjacency lists are sorted by target id, so iteration order
/// is deterministic everywhere.
class RoadNetwork {
 public:
  RoadNetwork() = default;

  // Validates ids, endpoints and lengths; builds sorted adjacency.
  static RoadNetwork build(std::vector<Node> nodes, std::vector<Edge> edges);

  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  const Node& node(int id) const;
  const Edge& edge(int id) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Out-neighbor node ids of v, ascending. Empty for dead ends.
  const std::vector<int>& out_neighbors(int v) const;
  // Edge ids aligned with out_neighbors(v).
  const std::vector<int>& out_edge_ids(int v) const;
  // Edge id of (u, v), or -1 when absent.
  int edge_between(int u, int v) const;

  // Bounding box over raw coordinates.
  double min_lng() const { return min_lng_; }
  double max_lng() const { return max_lng_; }
  double min_lat() const { return min_lat_; }
  double max_lat() const { return max_lat_; }
  bool inside_bbox(double lng, double lat) const {
    return lng >= min_lng_ && lng <= max_lng_ && lat >= min_lat_ && lat <= max_lat_;
  }

  // Affine map of raw coordinates onto [0,1]^2 (degenerate axes collapse
  // to 0). All coordinate distances in the system use this space.
  Vec2 normalized(double lng, double lat) const;
  Vec2 normalized_node(int v) const;

 private:
  void check_node_id(int v) const;

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_nodes_;
  std::vector<std::vector<int>> adj_edges_;
  double min_lng_ = 0.0, max_lng_ = 1.0, min_lat_ = 0.0, max_lat_ = 1.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Node minimizing Euclidean distance to the point in normalized space;
// ties resolved toward the smaller node id.
int nearest_node(const RoadNetwork& net, double lng, double lat);

struct Path {
  std::vector<int> nodes;

  int length() const { return static_cast<int>(nodes.size()); }
  bool operator==(const Path& other) const { return nodes == other.nodes; }
};

// True iff every consecutive node pair is an edge of the network and the
// path has at least two nodes.
bool is_valid_path(const RoadNetwork& net, const Path& path);

struct TripPoint {
  int node = 0;
  double ts = 0.0;  // seconds since epoch
};

struct Trip {
  long long id = 0;
  std::vector<TripPoint> points;

  double travel_time() const {
    return points.empty() ? 0.0 : points.back().ts - points.front().ts;
  }
  Path path() const;
};

struct OdtQuery {
  long long id = 0;
  double lng_o = 0.0, lat_o = 0.0;
  double lng_d = 0.0, lat_d = 0.0;
  double departure = 0.0;  // seconds since epoch
};

// ---- file formats (line oriented text, see README) ----

RoadNetwork load_network(const std::string& path);
void save_network(const RoadNetwork& net, const std::string& path);

std::vector<Trip> load_trips(const std::string& path);
void save_trips(const std::vector<Trip>& trips, const std::string& path);

std::vector<OdtQuery> load_queries(const std::string& path);
void save_queries(const std::vector<OdtQuery>& queries, const std::string& path);

// %.9g, the serialization width used by all text formats
std::string format_float(double v);

// Unweighted hop count from src to dst; -1 when unreachable.
int bfs_hops(const RoadNetwork& net, int src, int dst);

// Shortest path by edge weight (weights indexed by edge id, all > 0).
// Returns an empty path when dst is unreachable. Deterministic: equal-cost
// alternatives resolve via ascending adjacency order.
Path dijkstra_path(const RoadNetwork& net, int src, int dst,
                   const std::vector<double>& edge_weights);

}  // namespace odtq
