#include <sstream>

#include "doctest.h"
#include "evac/graph.hpp"
#include "evac/rng.hpp"
#include "oracles.hpp"

using namespace evac;

namespace {

std::string minimal_doc() {
  return R"({
    "nodes": [
      {"id": "A", "service_capacity": 2, "is_exit": false},
      {"id": "Exit", "service_capacity": 4, "is_exit": true}
    ],
    "edges": [{"from": "A", "to": "Exit", "length": 14.0}]
  })";
}

}  // namespace

TEST_CASE("load_graph accepts a minimal two-node document") {
  BuildingGraph g = load_graph_string(minimal_doc());
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(g.exits().size() == 1);
  // free_transit_time defaults to length / nominal speed.
  CHECK(g.edge(0).free_transit_time == doctest::Approx(14.0 / 1.4));
}

TEST_CASE("load_graph rejects malformed and invalid documents by name") {
  CHECK_THROWS_AS(load_graph_string("{not json"), ParseError);
  CHECK_THROWS_AS(load_graph_string("{\"nodes\": []}"), ParseError);

  std::string dangling = R"({
    "nodes": [{"id": "A"}, {"id": "E", "is_exit": true}],
    "edges": [{"from": "A", "to": "Z", "length": 3.0}]
  })";
  try {
    load_graph_string(dangling);
    FAIL("expected validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("\"Z\"") != std::string::npos);
  }

  std::string no_exit = R"({
    "nodes": [{"id": "A"}, {"id": "B"}],
    "edges": [{"from": "A", "to": "B", "length": 3.0}, {"from": "B", "to": "A", "length": 3.0}]
  })";
  CHECK_THROWS_AS(load_graph_string(no_exit), ValidationError);

  std::string unreachable = R"({
    "nodes": [{"id": "A"}, {"id": "B"}, {"id": "E", "is_exit": true}],
    "edges": [{"from": "A", "to": "E", "length": 3.0}, {"from": "E", "to": "B", "length": 3.0}]
  })";
  try {
    load_graph_string(unreachable);
    FAIL("expected validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("\"B\"") != std::string::npos);
  }
}

TEST_CASE("validation rejects documents violating each listed invariant") {
  // Mutations of a valid base document, each breaking exactly one rule.
  CHECK_THROWS_AS(load_graph_string(R"({
    "nodes": [{"id": "A", "service_capacity": 0}, {"id": "E", "is_exit": true}],
    "edges": [{"from": "A", "to": "E", "length": 3.0}]
  })"),
                  ValidationError);
  CHECK_THROWS_AS(load_graph_string(R"({
    "nodes": [{"id": "A"}, {"id": "A"}, {"id": "E", "is_exit": true}],
    "edges": [{"from": "A", "to": "E", "length": 3.0}]
  })"),
                  ValidationError);
  CHECK_THROWS_AS(load_graph_string(R"({
    "nodes": [{"id": "A"}, {"id": "E", "is_exit": true}],
    "edges": [{"from": "A", "to": "E", "length": -1.0}]
  })"),
                  ValidationError);
}

TEST_CASE("save/load round-trips the generated test building") {
  BuildingGraph g = synthesize_test_building(BuildingParams{}, 1);
  BuildingGraph back = load_graph_string(save_graph_string(g));
  CHECK(back == g);
}

TEST_CASE("generator hits the expected size and is deterministic") {
  BuildingGraph g = synthesize_test_building(BuildingParams{}, 1);
  CHECK(g.node_count() >= 225);
  CHECK(g.node_count() <= 275);
  CHECK(g.edge_count() >= 360);
  CHECK(g.edge_count() <= 440);

  BuildingGraph again = synthesize_test_building(BuildingParams{}, 1);
  CHECK(save_graph_string(again) == save_graph_string(g));  // byte-identical

  BuildingGraph other = synthesize_test_building(BuildingParams{}, 2);
  CHECK_FALSE(other == g);  // seed moves the jittered door lengths
}

TEST_CASE("generator validates parameters and handles the degenerate floor") {
  CHECK_THROWS_AS(synthesize_test_building({0, 10, 2, 2}, 1), ValidationError);
  CHECK_THROWS_AS(synthesize_test_building({3, -1, 2, 2}, 1), ValidationError);
  CHECK_THROWS_AS(synthesize_test_building({3, 10, 0, 2}, 1), ValidationError);
  CHECK_THROWS_AS(synthesize_test_building({3, 10, 2, 0}, 1), ValidationError);

  // Minimal corridor: one floor, no rooms.
  BuildingGraph tiny = synthesize_test_building({1, 0, 1, 1}, 1);
  CHECK(tiny.exits().size() == 1);
  for (size_t i = 0; i < tiny.node_count(); ++i) {
    if (!tiny.is_exit(i)) CHECK_NOTHROW(free_flow_shortest_path(tiny, i));
  }
}

TEST_CASE("generator marks two staircase sets on the default building") {
  BuildingGraph g = synthesize_test_building(BuildingParams{}, 1);
  auto sets = staircase_sets(g);
  REQUIRE(sets.size() == 2);
  CHECK(sets.count("central") == 1);
  CHECK(sets.count("east") == 1);
  CHECK(sets["central"].size() == 3);  // one landing per floor
}

TEST_CASE("free-flow shortest path on the trivial and diamond graphs") {
  BuildingGraph two = load_graph_string(minimal_doc());
  Route r = free_flow_shortest_path(two, "A");
  CHECK(r.nodes.size() == 2);
  CHECK(r.cost_s == doctest::Approx(10.0));

  // Two-hop branch of 10+10 beats the direct 25 s edge.
  BuildingGraph diamond = load_graph_string(R"({
    "nodes": [{"id": "A"}, {"id": "B"}, {"id": "E", "is_exit": true}],
    "edges": [
      {"from": "A", "to": "B", "length": 1.0, "free_transit_time": 10.0},
      {"from": "B", "to": "E", "length": 1.0, "free_transit_time": 10.0},
      {"from": "A", "to": "E", "length": 1.0, "free_transit_time": 25.0}
    ]
  })");
  Route d = free_flow_shortest_path(diamond, "A");
  CHECK(d.cost_s == doctest::Approx(20.0));
  CHECK(d.nodes.size() == 3);
}

TEST_CASE("free-flow ties break toward the smallest node-id sequence") {
  BuildingGraph g = load_graph_string(R"({
    "nodes": [{"id": "A"}, {"id": "B"}, {"id": "C"}, {"id": "E", "is_exit": true}],
    "edges": [
      {"from": "A", "to": "C", "length": 1.0, "free_transit_time": 5.0},
      {"from": "A", "to": "B", "length": 1.0, "free_transit_time": 5.0},
      {"from": "B", "to": "E", "length": 1.0, "free_transit_time": 5.0},
      {"from": "C", "to": "E", "length": 1.0, "free_transit_time": 5.0}
    ]
  })");
  Route r = free_flow_shortest_path(g, "A");
  REQUIRE(r.nodes.size() == 3);
  CHECK(g.node(r.nodes[1]).id == "B");
}

TEST_CASE("free-flow cost matches exhaustive enumeration on random graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    BuildingGraph g = oracles::random_reachable_graph(rng, 4 + rng.next_below(7), 0.25, 3);
    std::vector<double> dist = exit_distance_s(g);
    for (size_t start = 0; start < g.node_count(); ++start) {
      if (g.is_exit(start)) continue;
      std::vector<std::vector<size_t>> paths;
      oracles::all_exit_paths(g, start, &paths);
      REQUIRE(!paths.empty());
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : paths) best = std::min(best, oracles::path_cost_s(g, p));
      Route r = free_flow_shortest_path(g, start);
      CHECK(r.cost_s == doctest::Approx(best));
      CHECK(r.cost_s <= best + 1e-9);
      CHECK(dist[start] == doctest::Approx(best));
    }
  }
}
