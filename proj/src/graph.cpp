#include "evac/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "evac/rng.hpp"
#include "json.hpp"

namespace evac {

namespace {

using nlohmann::json;

std::string two_digits(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

BuildingGraph::BuildingGraph(std::vector<Node> nodes, std::vector<Edge> edges,
                             double capacity_step_s)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), capacity_step_s_(capacity_step_s) {
  if (capacity_step_s_ <= 0.0) {
    throw ValidationError("capacity_step_s must be positive");
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.id.empty()) throw ValidationError("node with empty id");
    if (!index_.emplace(n.id, i).second) {
      throw ValidationError("duplicate node id \"" + n.id + "\"");
    }
    if (n.service_capacity < 1) {
      throw ValidationError("node \"" + n.id + "\": service_capacity must be >= 1");
    }
  }

  out_.resize(nodes_.size());
  for (size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    auto from = index_.find(ed.from);
    if (from == index_.end()) {
      throw ValidationError("edge references missing node \"" + ed.from + "\"");
    }
    auto to = index_.find(ed.to);
    if (to == index_.end()) {
      throw ValidationError("edge references missing node \"" + ed.to + "\"");
    }
    if (ed.length <= 0.0) {
      throw ValidationError("edge " + ed.from + "->" + ed.to + ": length must be > 0");
    }
    if (ed.free_transit_time <= 0.0) {
      throw ValidationError("edge " + ed.from + "->" + ed.to +
                            ": free_transit_time must be > 0");
    }
    out_[from->second].push_back(
        {static_cast<uint32_t>(to->second), static_cast<uint32_t>(e)});
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    std::sort(out_[i].begin(), out_[i].end(), [this](const OutEdge& a, const OutEdge& b) {
      if (nodes_[a.to].id != nodes_[b.to].id) return nodes_[a.to].id < nodes_[b.to].id;
      return a.edge < b.edge;
    });
    if (nodes_[i].is_exit) exits_.push_back(i);
  }
  if (exits_.empty()) throw ValidationError("graph has no exit node");

  id_rank_.resize(nodes_.size());
  {
    std::vector<size_t> order(nodes_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [this](size_t a, size_t b) { return nodes_[a].id < nodes_[b].id; });
    for (size_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;
  }

  // Every non-exit node must reach some exit: reverse BFS from the exits.
  std::vector<char> reaches(nodes_.size(), 0);
  std::vector<std::vector<size_t>> rev(nodes_.size());
  for (size_t u = 0; u < nodes_.size(); ++u) {
    for (const OutEdge& oe : out_[u]) rev[oe.to].push_back(u);
  }
  std::deque<size_t> bfs;
  for (size_t x : exits_) {
    reaches[x] = 1;
    bfs.push_back(x);
  }
  while (!bfs.empty()) {
    size_t v = bfs.front();
    bfs.pop_front();
    for (size_t u : rev[v]) {
      if (!reaches[u]) {
        reaches[u] = 1;
        bfs.push_back(u);
      }
    }
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!reaches[i]) {
      throw ValidationError("node \"" + nodes_[i].id + "\" cannot reach any exit");
    }
  }
}

size_t BuildingGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownNodeError("unknown node \"" + id + "\"");
  return it->second;
}

std::optional<size_t> BuildingGraph::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BuildingGraph load_graph(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("graph document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges")) {
    throw ParseError("graph document must be an object with 'nodes' and 'edges'");
  }
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  try {
    for (const auto& jn : doc.at("nodes")) {
      Node n;
      n.id = jn.at("id").get<std::string>();
      n.label = jn.value("label", std::string{});
      n.floor = jn.value("floor", 0);
      n.x = jn.value("x", 0.0);
      n.y = jn.value("y", 0.0);
      n.z = jn.value("z", 0.0);
      n.service_capacity = jn.value("service_capacity", 1);
      n.is_exit = jn.value("is_exit", false);
      nodes.push_back(std::move(n));
    }
    for (const auto& je : doc.at("edges")) {
      Edge e;
      e.from = je.at("from").get<std::string>();
      e.to = je.at("to").get<std::string>();
      e.length = je.at("length").get<double>();
      e.free_transit_time =
          je.value("free_transit_time", e.length / kNominalWalkSpeedMps);
      edges.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("graph document field error: ") + e.what());
  }
  double step = doc.value("capacity_step_s", kDefaultCapacityStepS);
  return BuildingGraph(std::move(nodes), std::move(edges), step);
}

BuildingGraph load_graph_string(const std::string& text) {
  std::istringstream in(text);
  return load_graph(in);
}

BuildingGraph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open graph file: " + path);
  return load_graph(in);
}

void save_graph(const BuildingGraph& g, std::ostream& out) {
  json doc;
  doc["capacity_step_s"] = g.capacity_step_s();
  doc["nodes"] = json::array();
  for (const Node& n : g.nodes()) {
    doc["nodes"].push_back({{"id", n.id},
                            {"label", n.label},
                            {"floor", n.floor},
                            {"x", n.x},
                            {"y", n.y},
                            {"z", n.z},
                            {"service_capacity", n.service_capacity},
                            {"is_exit", n.is_exit}});
  }
  doc["edges"] = json::array();
  for (const Edge& e : g.edges()) {
    doc["edges"].push_back({{"from", e.from},
                            {"to", e.to},
                            {"length", e.length},
                            {"free_transit_time", e.free_transit_time}});
  }
  out << doc.dump(2) << "\n";
}

std::string save_graph_string(const BuildingGraph& g) {
  std::ostringstream out;
  save_graph(g, out);
  return out.str();
}

BuildingGraph synthesize_test_building(const BuildingParams& p, uint64_t seed) {
  if (p.floors < 1) throw ValidationError("invalid parameter: floors must be >= 1");
  if (p.rooms_per_floor < 0) {
    throw ValidationError("invalid parameter: rooms_per_floor must be >= 0");
  }
  if (p.staircases < 1) throw ValidationError("invalid parameter: staircases must be >= 1");
  if (p.exits < 1) throw ValidationError("invalid parameter: exits must be >= 1");

  const int corridor_len = std::max(p.rooms_per_floor, 2);
  if (p.staircases > corridor_len || p.exits > corridor_len) {
    throw ValidationError("invalid parameter: more staircases/exits than corridor positions");
  }

  // Geometry and capacity constants. Calibrated so that the two staircases
  // are the only bottleneck (2 persons per 9 s each) and 25 evacuees clear
  // the start floor in roughly 70 seconds; see README.
  const double seg_len = 2.5;         // corridor segment, meters
  const double stair_entry_len = 5.0;  // corridor -> landing
  const double stair_flight_len = 6.0;  // landing -> landing below
  const double stair_out_len = 3.0;   // ground landing -> corridor
  const double exit_door_len = 3.0;
  const double floor_height = 3.5;
  const int cap_room = 4;
  const int cap_corridor = 8;
  const int cap_stair = 2;
  const int cap_exit = 6;

  // Staircase positions along the corridor. The first ("central") sits at
  // mid-corridor and the second ("east") at the east end, which skews the
  // free-flow split roughly 75/25 toward the central stair.
  std::vector<int> stair_pos;
  std::vector<std::string> stair_name;
  for (int s = 0; s < p.staircases; ++s) {
    int pos;
    std::string name;
    if (s == 0) {
      pos = corridor_len / 2;
      name = "central";
    } else if (s == 1) {
      pos = corridor_len - 1;
      name = "east";
    } else if (s == 2) {
      pos = 0;
      name = "west";
    } else {
      pos = ((s - 2) * corridor_len) / p.staircases;
      name = "s" + std::to_string(s);
    }
    while (std::find(stair_pos.begin(), stair_pos.end(), pos) != stair_pos.end()) {
      pos = (pos + 1) % corridor_len;
    }
    stair_pos.push_back(pos);
    stair_name.push_back(name);
  }

  Rng rng(seed);
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  auto corridor_id = [&](int f, int pos) { return "c" + std::to_string(f) + "-" + two_digits(pos); };
  auto room_id = [&](int f, int pos) { return "r" + std::to_string(f) + "-" + two_digits(pos); };
  auto stair_id = [&](int s, int f) { return "s-" + stair_name[s] + "-f" + std::to_string(f); };

  for (int f = 0; f < p.floors; ++f) {
    for (int pos = 0; pos < corridor_len; ++pos) {
      nodes.push_back({corridor_id(f, pos),
                       "corridor:f" + std::to_string(f) + ":p" + std::to_string(pos), f,
                       pos * seg_len, 0.0, f * floor_height, cap_corridor, false});
    }
    for (int pos = 0; pos + 1 < corridor_len; ++pos) {
      double t = seg_len / kNominalWalkSpeedMps;
      edges.push_back({corridor_id(f, pos), corridor_id(f, pos + 1), seg_len, t});
      edges.push_back({corridor_id(f, pos + 1), corridor_id(f, pos), seg_len, t});
    }
    for (int r = 0; r < p.rooms_per_floor; ++r) {
      double door_len = rng.uniform(3.0, 5.0);
      nodes.push_back({room_id(f, r), "room:f" + std::to_string(f) + ":p" + std::to_string(r),
                       f, r * seg_len, 4.0, f * floor_height, cap_room, false});
      // Rooms drain one way into the corridor during an evacuation.
      edges.push_back({room_id(f, r), corridor_id(f, r), door_len,
                       door_len / kNominalWalkSpeedMps});
    }
  }

  for (int s = 0; s < p.staircases; ++s) {
    for (int f = 0; f < p.floors; ++f) {
      nodes.push_back({stair_id(s, f),
                       "stair:" + stair_name[s] + ":f" + std::to_string(f), f,
                       stair_pos[s] * seg_len, -2.0, f * floor_height, cap_stair, false});
    }
    for (int f = 1; f < p.floors; ++f) {
      // Landings are reachable from their floor's corridor in both
      // directions; the flight itself only goes down.
      edges.push_back({corridor_id(f, stair_pos[s]), stair_id(s, f), stair_entry_len,
                       stair_entry_len / kNominalWalkSpeedMps});
      edges.push_back({stair_id(s, f), corridor_id(f, stair_pos[s]), stair_entry_len,
                       stair_entry_len / kNominalWalkSpeedMps});
      edges.push_back({stair_id(s, f), stair_id(s, f - 1), stair_flight_len,
                       stair_flight_len / kNominalWalkSpeedMps});
    }
    edges.push_back({stair_id(s, 0), corridor_id(0, stair_pos[s]), stair_out_len,
                     stair_out_len / kNominalWalkSpeedMps});
    edges.push_back({corridor_id(0, stair_pos[s]), stair_id(s, 0), stair_out_len,
                     stair_out_len / kNominalWalkSpeedMps});
  }

  for (int x = 0; x < p.exits; ++x) {
    // Exits sit on the ground-floor corridor at the staircase feet.
    int pos = x < p.staircases ? stair_pos[x]
                               : ((x + 1) * corridor_len) / (p.exits + 1);
    std::string name = x < p.staircases ? stair_name[x] : "door" + std::to_string(x);
    std::string id = "x-" + name;
    nodes.push_back({id, "exit:" + name, 0, pos * seg_len, 2.0, 0.0, cap_exit, true});
    edges.push_back({corridor_id(0, pos), id, exit_door_len,
                     exit_door_len / kNominalWalkSpeedMps});
  }

  return BuildingGraph(std::move(nodes), std::move(edges), kDefaultCapacityStepS);
}

std::vector<double> exit_distance_s(const BuildingGraph& g) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.node_count(), inf);
  // Reverse Dijkstra from all exits at once.
  std::vector<std::vector<std::pair<size_t, double>>> rev(g.node_count());
  for (size_t u = 0; u < g.node_count(); ++u) {
    for (const OutEdge& oe : g.out_edges(u)) {
      rev[oe.to].push_back({u, g.edge(oe.edge).free_transit_time});
    }
  }
  using Item = std::pair<double, size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (size_t x : g.exits()) {
    dist[x] = 0.0;
    pq.push({0.0, x});
  }
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (auto [u, w] : rev[v]) {
      if (d + w < dist[u]) {
        dist[u] = d + w;
        pq.push({dist[u], u});
      }
    }
  }
  return dist;
}

std::vector<int32_t> exit_next_hop(const BuildingGraph& g) {
  std::vector<double> dist = exit_distance_s(g);
  std::vector<int32_t> next(g.node_count(), -1);
  constexpr double tol = 1e-9;
  for (size_t u = 0; u < g.node_count(); ++u) {
    if (g.is_exit(u) || std::isinf(dist[u])) continue;
    // Smallest-id successor that lies on some optimal route.
    for (const OutEdge& oe : g.out_edges(u)) {
      double via = g.edge(oe.edge).free_transit_time + dist[oe.to];
      if (via <= dist[u] + tol) {
        next[u] = static_cast<int32_t>(oe.to);
        break;
      }
    }
  }
  return next;
}

Route free_flow_shortest_path(const BuildingGraph& g, size_t from) {
  std::vector<double> dist = exit_distance_s(g);
  if (std::isinf(dist[from])) {
    throw NoExitReachableError("no exit reachable from \"" + g.node(from).id + "\"");
  }
  std::vector<int32_t> next = exit_next_hop(g);
  Route route;
  route.cost_s = dist[from];
  size_t u = from;
  route.nodes.push_back(u);
  while (!g.is_exit(u)) {
    u = static_cast<size_t>(next[u]);
    route.nodes.push_back(u);
  }
  return route;
}

Route free_flow_shortest_path(const BuildingGraph& g, const std::string& from_id) {
  return free_flow_shortest_path(g, g.index_of(from_id));
}

std::map<std::string, std::vector<size_t>> staircase_sets(const BuildingGraph& g) {
  std::map<std::string, std::vector<size_t>> sets;
  for (size_t i = 0; i < g.node_count(); ++i) {
    const std::string& label = g.node(i).label;
    if (label.rfind("stair:", 0) != 0) continue;
    size_t start = 6;
    size_t end = label.find(':', start);
    std::string name = end == std::string::npos ? label.substr(start)
                                                : label.substr(start, end - start);
    sets[name].push_back(i);
  }
  return sets;
}

}  // namespace evac
