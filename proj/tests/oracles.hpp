#pragma once

// Independent reference computations used by tests. These deliberately stay
// away from the search code they check: routing answers come from exhaustive
// path enumeration and the hold-delay recurrence is restated here from the
// ledger contract alone.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evac/graph.hpp"
#include "evac/ledger.hpp"
#include "evac/rng.hpp"

namespace oracles {

using evac::BuildingGraph;
using evac::ReservationLedger;
using evac::Step;

// All simple paths from `start` to any exit.
inline void all_exit_paths(const BuildingGraph& g, size_t start,
                           std::vector<std::vector<size_t>>* out) {
  std::vector<size_t> path{start};
  std::vector<char> used(g.node_count(), 0);
  used[start] = 1;
  struct Frame {
    size_t node;
    size_t next_edge;
  };
  std::vector<Frame> stack{{start, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& out_edges = g.out_edges(f.node);
    if (g.is_exit(f.node) || f.next_edge >= out_edges.size()) {
      if (g.is_exit(f.node)) out->push_back(path);
      used[f.node] = 0;
      path.pop_back();
      stack.pop_back();
      continue;
    }
    size_t to = out_edges[f.next_edge++].to;
    if (used[to]) continue;
    used[to] = 1;
    path.push_back(to);
    stack.push_back({to, 0});
  }
}

// Free-flow cost of one path.
inline double path_cost_s(const BuildingGraph& g, const std::vector<size_t>& path) {
  double cost = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& out = g.out_edges(path[i]);
    for (const auto& oe : out) {
      if (oe.to == path[i + 1]) {
        cost += g.edge(oe.edge).free_transit_time;
        break;
      }
    }
  }
  return cost;
}

// Hold-delay recurrence over a fixed path, restated from the ledger
// contract: arrival accumulates edge times; a full arrival step delays
// admission to the start of the earliest step with spare capacity.
inline Step path_exit_step(const BuildingGraph& g, const ReservationLedger& ledger,
                           const std::vector<size_t>& path, Step depart) {
  double t = static_cast<double>(depart) * ledger.delta_s();
  Step step = depart;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& out = g.out_edges(path[i]);
    double ftt = 0.0;
    for (const auto& oe : out) {
      if (oe.to == path[i + 1]) {
        ftt = g.edge(oe.edge).free_transit_time;
        break;
      }
    }
    double t_arr = t + ftt;
    Step s = static_cast<Step>(t_arr / ledger.delta_s());
    Step s_free = s;
    while (ledger.reserved(path[i + 1], s_free) >= ledger.capacity(path[i + 1])) ++s_free;
    t = s_free == s ? t_arr : static_cast<double>(s_free) * ledger.delta_s();
    step = s_free;
  }
  return step;
}

// Minimum exit step over every simple exit path (brute force).
inline std::optional<Step> quickest_exit_step(const BuildingGraph& g,
                                              const ReservationLedger& ledger, size_t start,
                                              Step depart) {
  std::vector<std::vector<size_t>> paths;
  all_exit_paths(g, start, &paths);
  std::optional<Step> best;
  for (const auto& path : paths) {
    Step s = path_exit_step(g, ledger, path, depart);
    if (!best || s < *best) best = s;
  }
  return best;
}

// Random connected digraph where every node reaches an exit. Returns node
// definitions compatible with BuildingGraph validation.
inline BuildingGraph random_reachable_graph(evac::Rng& rng, size_t n_nodes, double extra_edge_p,
                                            int max_capacity, double capacity_step_s = 9.0) {
  std::vector<evac::Node> nodes;
  std::vector<evac::Edge> edges;
  for (size_t i = 0; i < n_nodes; ++i) {
    evac::Node node;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "n%02zu", i);
    node.id = buf;
    node.service_capacity = 1 + static_cast<int>(rng.next_below(max_capacity));
    node.is_exit = i == n_nodes - 1;
    nodes.push_back(node);
  }
  auto add_edge = [&](size_t a, size_t b) {
    for (const auto& e : edges) {
      if (e.from == nodes[a].id && e.to == nodes[b].id) return;
    }
    double len = 2.0 + rng.next_double() * 26.0;
    edges.push_back({nodes[a].id, nodes[b].id, len, len / evac::kNominalWalkSpeedMps});
  };
  // Chain toward the exit keeps everything reachable.
  for (size_t i = 0; i + 1 < n_nodes; ++i) add_edge(i, i + 1);
  for (size_t a = 0; a < n_nodes; ++a) {
    for (size_t b = 0; b < n_nodes; ++b) {
      if (a == b) continue;
      if (rng.next_double() < extra_edge_p) add_edge(a, b);
    }
  }
  return BuildingGraph(std::move(nodes), std::move(edges), capacity_step_s);
}

// Sprinkles random reservations without ever filling a cell beyond capacity.
inline void random_reservations(evac::Rng& rng, const BuildingGraph& g,
                                ReservationLedger* ledger, int rounds, Step max_step) {
  for (int i = 0; i < rounds; ++i) {
    size_t v = static_cast<size_t>(rng.next_below(g.node_count()));
    Step s = static_cast<Step>(rng.next_below(static_cast<uint64_t>(max_step)));
    if (ledger->residual(v, s) > 0) ledger->reserve(v, s);
  }
}

}  // namespace oracles
