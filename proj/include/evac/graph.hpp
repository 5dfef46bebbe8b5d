#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evac {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Malformed graph document (bad JSON, missing/ill-typed fields).
struct ParseError : GraphError {
  using GraphError::GraphError;
};
// Structurally well-formed document that violates a graph invariant.
struct ValidationError : GraphError {
  using GraphError::GraphError;
};
struct UnknownNodeError : GraphError {
  using GraphError::GraphError;
};
struct NoExitReachableError : GraphError {
  using GraphError::GraphError;
};

// Nominal free-flow walking speed used to derive transit times from lengths.
constexpr double kNominalWalkSpeedMps = 1.4;

// One service_capacity quantum admits that many persons per this many
// seconds. Planning time-steps scale node capacity relative to it, so the
// physical admission rate of a door or stair does not depend on the
// planner's step duration.
constexpr double kDefaultCapacityStepS = 9.0;

struct Node {
  std::string id;
  std::string label;
  int floor = 0;
  double x = 0.0, y = 0.0, z = 0.0;
  int service_capacity = 1;  // persons per capacity_step_s
  bool is_exit = false;

  bool operator==(const Node&) const = default;
};

struct Edge {
  std::string from;
  std::string to;
  double length = 0.0;             // meters
  double free_transit_time = 0.0;  // seconds

  bool operator==(const Edge&) const = default;
};

struct OutEdge {
  uint32_t to;    // node index
  uint32_t edge;  // edge index
};

// Immutable after construction; the constructor validates every invariant
// (unique ids, positive capacities and lengths, endpoints exist, at least
// one exit, every non-exit node reaches an exit).
class BuildingGraph {
 public:
  BuildingGraph(std::vector<Node> nodes, std::vector<Edge> edges,
                double capacity_step_s = kDefaultCapacityStepS);

  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const { return edges_.size(); }
  const Node& node(size_t i) const { return nodes_[i]; }
  const Edge& edge(size_t i) const { return edges_[i]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  size_t index_of(const std::string& id) const;  // throws UnknownNodeError
  std::optional<size_t> find(const std::string& id) const;

  // Outgoing edges, sorted by target node id. The position of an edge in
  // this list is its deterministic "edge id" for tie-breaking.
  const std::vector<OutEdge>& out_edges(size_t i) const { return out_[i]; }

  const std::vector<size_t>& exits() const { return exits_; }
  bool is_exit(size_t i) const { return nodes_[i].is_exit; }

  // Rank of node i when all ids are sorted; used for lexicographic ties.
  size_t id_rank(size_t i) const { return id_rank_[i]; }

  double capacity_step_s() const { return capacity_step_s_; }

  // Seconds per admitted person when the node is saturated.
  double service_interval_s(size_t i) const {
    return capacity_step_s_ / nodes_[i].service_capacity;
  }

  bool operator==(const BuildingGraph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ &&
           capacity_step_s_ == other.capacity_step_s_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<OutEdge>> out_;
  std::vector<size_t> exits_;
  std::vector<size_t> id_rank_;
  std::map<std::string, size_t> index_;
  double capacity_step_s_;
};

BuildingGraph load_graph(std::istream& in);
BuildingGraph load_graph_string(const std::string& text);
BuildingGraph load_graph_file(const std::string& path);
void save_graph(const BuildingGraph& g, std::ostream& out);
std::string save_graph_string(const BuildingGraph& g);

struct BuildingParams {
  int floors = 3;
  int rooms_per_floor = 40;
  int staircases = 2;
  int exits = 2;
};

// Synthetic multi-floor test building: one corridor spine per floor with a
// room hanging off each corridor node, downward staircase chains, and exit
// doors on floor 0 next to the staircase feet. Deterministic per seed.
BuildingGraph synthesize_test_building(const BuildingParams& params, uint64_t seed);

struct Route {
  std::vector<size_t> nodes;
  double cost_s = 0.0;
};

// Minimum free-flow-time route from `from` to the nearest exit. Ties are
// broken toward the lexicographically smallest node-id sequence.
Route free_flow_shortest_path(const BuildingGraph& g, size_t from);
Route free_flow_shortest_path(const BuildingGraph& g, const std::string& from_id);

// Free-flow seconds from every node to its nearest exit (+inf if none).
std::vector<double> exit_distance_s(const BuildingGraph& g);

// Next hop of the lexicographically-smallest free-flow route per node;
// -1 for exits and unreachable nodes.
std::vector<int32_t> exit_next_hop(const BuildingGraph& g);

// Groups nodes labelled "stair:<name>:..." into per-staircase sets.
std::map<std::string, std::vector<size_t>> staircase_sets(const BuildingGraph& g);

}  // namespace evac
