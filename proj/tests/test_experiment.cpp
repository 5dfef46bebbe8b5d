#include <sstream>

#include "doctest.h"
#include "evac/experiment.hpp"
#include "evac/signs.hpp"

using namespace evac;

TEST_CASE("box stats with one replication collapse to a point") {
  BoxStats s = box_stats({42.0});
  CHECK(s.min == 42.0);
  CHECK(s.q1 == 42.0);
  CHECK(s.median == 42.0);
  CHECK(s.q3 == 42.0);
  CHECK(s.max == 42.0);
}

TEST_CASE("box stats use inclusive linear interpolation") {
  BoxStats s = box_stats({1.0, 2.0, 3.0, 4.0});
  CHECK(s.min == 1.0);
  CHECK(s.q1 == doctest::Approx(1.75));
  CHECK(s.median == doctest::Approx(2.5));
  CHECK(s.q3 == doctest::Approx(3.25));
  CHECK(s.max == 4.0);
  CHECK(s.min <= s.q1);
  CHECK(s.q1 <= s.median);
  CHECK(s.median <= s.q3);
  CHECK(s.q3 <= s.max);

  BoxStats odd = box_stats({5.0, 1.0, 3.0});
  CHECK(odd.median == 3.0);
  CHECK(odd.q1 == doctest::Approx(2.0));
  CHECK(odd.q3 == doctest::Approx(4.0));
}

TEST_CASE("split error arithmetic matches the stated examples") {
  BuildingGraph g = synthesize_test_building(BuildingParams{}, 1);
  auto sets = staircase_sets(g);
  REQUIRE(sets.size() == 2);
  size_t central = sets.at("central")[0];
  size_t east = sets.at("east")[0];
  size_t room = g.index_of("r1-00");
  size_t exit_node = g.exits()[0];

  auto plan_via = [&](const std::string& id, size_t stair) {
    RoutePlan p;
    p.evacuee_id = id;
    p.hops = {{room, 0}, {stair, 1}, {exit_node, 2}};
    p.exit = exit_node;
    p.exit_step = 2;
    return p;
  };
  auto result_via = [&](const std::vector<size_t>& stairs) {
    SimResult r;
    for (size_t i = 0; i < stairs.size(); ++i) {
      r.evacuee_ids.push_back("e" + std::to_string(i));
      r.exit_time_s.push_back(10.0);
      r.stuck.push_back(0);
      r.admissions.push_back({{5.0, stairs[i]}, {10.0, exit_node}});
    }
    return r;
  };

  // Planned 50/50, realized 50/50: zero error.
  std::vector<RoutePlan> plans{plan_via("e0", central), plan_via("e1", east),
                               plan_via("e2", central), plan_via("e3", east)};
  SplitError zero = staircase_split_error(g, plans, result_via({central, east, central, east}));
  CHECK(zero.error_pp == doctest::Approx(0.0));

  // Planned 50/50, realized 60/40 central-heavy: +10 pp on the central set.
  std::vector<RoutePlan> plans10;
  std::vector<size_t> realized10;
  for (int i = 0; i < 10; ++i) {
    plans10.push_back(plan_via("e" + std::to_string(i), i < 5 ? central : east));
    realized10.push_back(i < 6 ? central : east);
  }
  SplitError ten = staircase_split_error(g, plans10, result_via(realized10));
  CHECK(ten.planned_pct == doctest::Approx(50.0));
  CHECK(ten.realized_pct == doctest::Approx(60.0));
  CHECK(ten.error_pp == doctest::Approx(10.0));

  // No staircase traffic at all is an error.
  std::vector<RoutePlan> direct{[&] {
    RoutePlan p;
    p.evacuee_id = "e0";
    p.hops = {{room, 0}, {exit_node, 1}};
    p.exit = exit_node;
    p.exit_step = 1;
    return p;
  }()};
  CHECK_THROWS_AS(staircase_split_error(g, direct, result_via({})), ExperimentError);
}

TEST_CASE("scenario json round-trips including explicit starts") {
  Scenario sc;
  sc.graph_source = "building.json";
  sc.headcount = 2;
  sc.policy = "signs";
  sc.deltas_s = {9.0, 18.0};
  sc.replications = 4;
  sc.base_seed = 77;
  sc.backend = "cpn";
  sc.cpn_budget = 123;
  sc.starts.kind = StartDistribution::Kind::Explicit;
  sc.starts.explicit_list = {{"a", "r1-00", 0}, {"b", "r1-01", 2}};

  std::ostringstream out;
  scenario_to_json(sc, out);
  std::istringstream in(out.str());
  Scenario back = scenario_from_json(in);
  CHECK(back == sc);
}

TEST_CASE("experiment tables are reproducible and round-trip through json") {
  BuildingGraph g = synthesize_test_building(BuildingParams{}, 1);
  Scenario sc;
  sc.headcount = 12;
  sc.policy = "assigned";
  sc.deltas_s = {9.0};
  sc.replications = 3;
  sc.base_seed = 11;

  ResultTable t1 = run_experiment(sc, g);
  ResultTable t2 = run_experiment(sc, g);
  CHECK(t1 == t2);
  REQUIRE(t1.cells.size() == 1);
  CHECK(t1.cells[0].makespans_s.size() == 3);
  CHECK(t1.cells[0].stuck_total == 0);
  CHECK(t1.cells[0].bound_s > 0.0);
  for (double mk : t1.cells[0].makespans_s) CHECK(mk >= t1.cells[0].bound_s);

  std::ostringstream out;
  table_to_json(t1, out);
  std::istringstream in(out.str());
  ResultTable back = table_from_json(in);
  CHECK(back == t1);
}

TEST_CASE("csv report exposes exactly the documented columns") {
  BuildingGraph g = synthesize_test_building(BuildingParams{}, 1);
  Scenario sc;
  sc.headcount = 8;
  sc.policy = "shortest";
  sc.deltas_s = {9.0};
  sc.replications = 2;
  ResultTable table = run_experiment(sc, g);

  std::string csv = report(table, "csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line.rfind("# evac-results", 0) == 0);
  std::getline(lines, line);
  CHECK(line.rfind("# scenario:", 0) == 0);
  std::getline(lines, line);
  CHECK(line ==
        "headcount,delta_s,policy,backend,replications,makespan_min_s,makespan_q1_s,"
        "makespan_median_s,makespan_q3_s,makespan_max_s,bound_s,split_err_median_pp,"
        "split_err_iqr_pp,clearance_median_s,stuck");
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 14);
  }
  CHECK(rows == 1);
}

TEST_CASE("an empty table reports header-only csv") {
  ResultTable table;
  std::string csv = report(table, "csv");
  std::istringstream lines(csv);
  std::string line;
  int content_rows = 0, header_rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    if (line[0] == '#' || line.rfind("headcount,", 0) == 0) {
      ++header_rows;
    } else {
      ++content_rows;
    }
  }
  CHECK(header_rows == 3);
  CHECK(content_rows == 0);
  CHECK_THROWS_AS(report(table, "yaml"), ExperimentError);
}

TEST_CASE("signs policy produces split errors and makespans per delta") {
  BuildingGraph g = synthesize_test_building(BuildingParams{}, 1);
  Scenario sc;
  sc.headcount = 20;
  sc.policy = "signs";
  sc.deltas_s = {9.0, 144.0};
  sc.replications = 2;
  sc.base_seed = 31;
  ResultTable table = run_experiment(sc, g);
  REQUIRE(table.cells.size() == 2);
  for (const CellResult& cell : table.cells) {
    CHECK(cell.makespans_s.size() == 2);
    CHECK(cell.split_errors_pp.size() == 2);
    CHECK(cell.split_error.has_value());
    for (double err : cell.split_errors_pp) {
      CHECK(err >= -100.0);
      CHECK(err <= 100.0);
    }
  }
}
