// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/roadnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "odtq/error.hpp"

namespace odtq {

RoadNetwork RoadNetwork::build(std::vector<Node> nodes, std::vector<Edge> edges) {
  RoadNetwork net;
  int n = static_cast<int>(nodes.size());
  if (n == 0) fail(ErrorCode::kValidation, "network has no nodes");

  std::sort(nodes.begin(), nodes.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  for (int i = 0; i < n; ++i) {
    if (nodes[i].id != i)
      fail(ErrorCode::kValidation,
           "node ids must be dense 0.." + std::to_string(n - 1) + "; got id " +
               std::to_string(nodes[i].id));
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.id < b.id; });
  int m = static_cast<int>(edges.size());
  for (int i = 0; i < m; ++i) {
    const Edge& e = edges[i];
    if (e.id != i)
      fail(ErrorCode::kValidation, "edge ids must be dense 0.." +
                                       std::to_string(m - 1) + "; got id " +
                                       std::to_string(e.id));
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
      fail(ErrorCode::kValidation,
           "edge " + std::to_string(e.id) + " references unknown node " +
               std::to_string(e.from < 0 || e.from >= n ? e.from : e.to));
    if (!(e.length > 0.0))
      fail(ErrorCode::kValidation,
           "edge " + std::to_string(e.id) + " has non-positive length");
  }

  net.nodes_ = std::move(nodes);
  net.edges_ = std::move(edges);
  net.adj_nodes_.assign(n, {});
  net.adj_edges_.assign(n, {});
  for (const Edge& e : net.edges_) {
    net.adj_nodes_[e.from].push_back(e.to);
    net.adj_edges_[e.from].push_back(e.id);
  }
  for (int v = 0; v < n; ++v) {
    auto& tgt = net.adj_nodes_[v];
    auto& eid = net.adj_edges_[v];
    std::vector<int> order(tgt.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return tgt[a] < tgt[b]; });
    std::vector<int> t2(tgt.size()), e2(tgt.size());
    for (size_t i = 0; i < order.size(); ++i) {
      t2[i] = tgt[order[i]];
      e2[i] = eid[order[i]];
    }
    for (size_t i = 1; i < t2.size(); ++i)
      if (t2[i] == t2[i - 1])
        fail(ErrorCode::kValidation,
             "duplicate directed edge " + std::to_string(v) + " -> " +
                 std::to_string(t2[i]));
    tgt = std::move(t2);
    eid = std::move(e2);
  }

  net.min_lng_ = std::numeric_limits<double>::infinity();
  net.max_lng_ = -net.min_lng_;
  net.min_lat_ = net.min_lng_;
  net.max_lat_ = net.max_lng_;
  for (const Node& v : net.nodes_) {
    net.min_lng_ = std::min(net.min_lng_, v.lng);
    net.max_lng_ = std::max(net.max_lng_, v.lng);
    net.min_lat_ = std::min(net.min_lat_, v.lat);
    net.max_lat_ = std::max(net.max_lat_, v.lat);
  }
  return net;
}

void RoadNetwork::check_node_id(int v) const {
  if (v < 0 || v >= n_nodes())
    fail(ErrorCode::kContract, "node id " + std::to_string(v) + " out of range");
}

const Node& RoadNetwork::node(int id) const {
  check_node_id(id);
  return nodes_[id];
}

const Edge& RoadNetwork::edge(int id) const {
  if (id < 0 || id >= n_edges())
    fail(ErrorCode::kContract, "edge id " + std::to_string(id) + " out of range");
  return edges_[id];
}

const std::vector<int>& RoadNetwork::out_neighbors(int v) const {
  check_node_id(v);
  return adj_nodes_[v];
}

const std::vector<int>& RoadNetwork::out_edge_ids(int v) const {
  check_node_id(v);
  return adj_edges_[v];
}

int RoadNetwork::edge_between(int u, int v) const {
  check_node_id(u);
  const auto& tgt = adj_nodes_[u];
  auto it = std::lower_bound(tgt.begin(), tgt.end(), v);
  if (it == tgt.end() || *it != v) return -1;
  return adj_edges_[u][it - tgt.begin()];
}

Vec2 RoadNetwork::normalized(double lng, double lat) const {
  double w = max_lng_ - min_lng_;
  double h = max_lat_ - min_lat_;
  Vec2 p;
  p.x = w > 0.0 ? (lng - min_lng_) / w : 0.0;
  p.y = h > 0.0 ? (lat - min_lat_) / h : 0.0;
  return p;
}

Vec2 RoadNetwork::normalized_node(int v) const {
  const Node& n = node(v);
  return normalized(n.lng, n.lat);
}

int nearest_node(const RoadNetwork& net, double lng, double lat) {
  if (net.n_nodes() == 0) fail(ErrorCode::kContract, "nearest_node on empty network");
  Vec2 p = net.normalized(lng, lat);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int v = 0; v < net.n_nodes(); ++v) {
    Vec2 q = net.normalized_node(v);
    double dx = q.x - p.x, dy = q.y - p.y;
    double d = dx * dx + dy * dy;
    if (d < best_d) {  // strict: ties keep the smaller id
      best_d = d;
      best = v;
    }
  }
  return best;
}

bool is_valid_path(const RoadNetwork& net, const Path& path) {
  if (path.length() < 2) return false;
  for (int v : path.nodes)
    if (v < 0 || v >= net.n_nodes()) return false;
  for (size_t i = 0; i + 1 < path.nodes.size(); ++i)
    if (net.edge_between(path.nodes[i], path.nodes[i + 1]) < 0) return false;
  return true;
}

Path Trip::path() const {
  Path p;
  p.nodes.reserve(points.size());
  for (const TripPoint& tp : points) p.nodes.push_back(tp.node);
  return p;
}

std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  fail(ErrorCode::kParse, path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  return out;
}

}  // namespace

RoadNetwork load_network(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) parse_fail(path, lineno, "empty file");
  long long n = 0, m = 0;
  {
    std::istringstream ss(line);
    std::string knodes, kedges;
    if (!(ss >> knodes >> n >> kedges >> m) || knodes != "#nodes" || kedges != "#edges")
      parse_fail(path, lineno, "expected header '#nodes N #edges E'");
  }
  if (n <= 0 || m < 0) parse_fail(path, lineno, "invalid node/edge counts");
  std::vector<Node> nodes;
  nodes.reserve(n);
  for (long long i = 0; i < n; ++i) {
    ++lineno;
    if (!std::getline(in, line)) parse_fail(path, lineno, "missing node record");
    std::istringstream ss(line);
    Node v;
    if (!(ss >> v.id >> v.lng >> v.lat))
      parse_fail(path, lineno, "expected '<id> <lng> <lat>'");
    nodes.push_back(v);
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (long long i = 0; i < m; ++i) {
    ++lineno;
    if (!std::getline(in, line)) parse_fail(path, lineno, "missing edge record");
    std::istringstream ss(line);
    Edge e;
    if (!(ss >> e.id >> e.from >> e.to >> e.length))
      parse_fail(path, lineno, "expected '<id> <from> <to> <length>'");
    edges.push_back(e);
  }
  return RoadNetwork::build(std::move(nodes), std::move(edges));
}

void save_network(const RoadNetwork& net, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "#nodes " << net.n_nodes() << " #edges " << net.n_edges() << "\n";
  for (const Node& v : net.nodes())
    out << v.id << ' ' << format_float(v.lng) << ' ' << format_float(v.lat) << "\n";
  for (const Edge& e : net.edges())
    out << e.id << ' ' << e.from << ' ' << e.to << ' ' << format_float(e.length) << "\n";
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

std::vector<Trip> load_trips(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Trip> trips;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    size_t semi = line.find(';');
    if (semi == std::string::npos) parse_fail(path, lineno, "expected '<id>;<points>'");
    Trip t;
    try {
      t.id = std::stoll(line.substr(0, semi));
    } catch (const std::exception&) {
      parse_fail(path, lineno, "bad trip id");
    }
    std::istringstream ss(line.substr(semi + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      size_t colon = tok.find(':');
      if (colon == std::string::npos) parse_fail(path, lineno, "expected '<node>:<ts>'");
      TripPoint p;
      try {
        p.node = std::stoi(tok.substr(0, colon));
        p.ts = static_cast<double>(std::stoll(tok.substr(colon + 1)));
      } catch (const std::exception&) {
        parse_fail(path, lineno, "bad trip point '" + tok + "'");
      }
      t.points.push_back(p);
    }
    if (t.points.size() < 2) parse_fail(path, lineno, "trip needs at least two points");
    for (size_t i = 1; i < t.points.size(); ++i)
      if (t.points[i].ts < t.points[i - 1].ts)
        parse_fail(path, lineno, "timestamps must be non-decreasing");
    trips.push_back(std::move(t));
  }
  return trips;
}

void save_trips(const std::vector<Trip>& trips, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Trip& t : trips) {
    out << t.id << ';';
    for (size_t i = 0; i < t.points.size(); ++i) {
      if (i) out << ',';
      out << t.points[i].node << ':' << static_cast<long long>(std::llround(t.points[i].ts));
    }
    out << "\n";
  }
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

std::vector<OdtQuery> load_queries(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<OdtQuery> queries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    for (char& c : line)
      if (c == ';' || c == ',') c = ' ';
    std::istringstream ss(line);
    OdtQuery q;
    long long dep = 0;
    if (!(ss >> q.id >> q.lng_o >> q.lat_o >> q.lng_d >> q.lat_d >> dep))
      parse_fail(path, lineno,
                 "expected '<id>;<lng_o>,<lat_o>;<lng_d>,<lat_d>;<departure_ts>'");
    q.departure = static_cast<double>(dep);
    queries.push_back(q);
  }
  return queries;
}

void save_queries(const std::vector<OdtQuery>& queries, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const OdtQuery& q : queries) {
    out << q.id << ';' << format_float(q.lng_o) << ',' << format_float(q.lat_o) << ';'
        << format_float(q.lng_d) << ',' << format_float(q.lat_d) << ';'
        << static_cast<long long>(std::llround(q.departure)) << "\n";
  }
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

int bfs_hops(const RoadNetwork& net, int src, int dst) {
  net.node(src);
  net.node(dst);
  if (src == dst) return 0;
  std::vector<int> dist(net.n_nodes(), -1);
  std::queue<int> q;
  dist[src] = 0;
  q.push(src);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int w : net.out_neighbors(u)) {
      if (dist[w] >= 0) continue;
      dist[w] = dist[u] + 1;
      if (w == dst) return dist[w];
      q.push(w);
    }
  }
  return -1;
}

Path dijkstra_path(const RoadNetwork& net, int src, int dst,
                   const std::vector<double>& edge_weights) {
  if (static_cast<int>(edge_weights.size()) != net.n_edges())
    fail(ErrorCode::kContract, "edge_weights size mismatch");
  net.node(src);
  net.node(dst);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(net.n_nodes(), inf);
  std::vector<int> prev(net.n_nodes(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[src] = 0.0;
  heap.push({0.0, src});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    const auto& nbr = net.out_neighbors(u);
    const auto& eid = net.out_edge_ids(u);
    for (size_t i = 0; i < nbr.size(); ++i) {
      double nd = d + edge_weights[eid[i]];
      if (nd < dist[nbr[i]]) {
        dist[nbr[i]] = nd;
        prev[nbr[i]] = u;
        heap.push({nd, nbr[i]});
      }
    }
  }
  Path p;
  if (dist[dst] == inf) return p;
  for (int v = dst; v != -1; v = prev[v]) p.nodes.push_back(v);
  std::reverse(p.nodes.begin(), p.nodes.end());
  return p;
}

}  // namespace odtq
