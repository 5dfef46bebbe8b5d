#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evac/graph.hpp"
#include "evac/planner.hpp"
#include "evac/sim.hpp"

namespace evac {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentError : GraphError {
  using GraphError::GraphError;
};

// Five-number summary with quartiles by inclusive linear interpolation.
struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;

  double iqr() const { return q3 - q1; }
  bool operator==(const BoxStats&) const = default;
};

BoxStats box_stats(std::vector<double> values);

struct SplitError {
  double planned_pct = 0.0;   // share of plans through the first staircase set
  double realized_pct = 0.0;  // share realized in the simulation
  double error_pp = 0.0;      // realized - planned, percentage points
};

// Planned vs realized split across the building's two staircase sets.
SplitError staircase_split_error(const BuildingGraph& g, const std::vector<RoutePlan>& plans,
                                 const SimResult& result);

struct ExplicitStart {
  std::string evacuee_id;
  std::string node_id;
  Step available_from = 0;

  bool operator==(const ExplicitStart&) const = default;
};

struct StartDistribution {
  enum class Kind { FirstFloorRooms, Explicit };
  Kind kind = Kind::FirstFloorRooms;
  std::vector<ExplicitStart> explicit_list;

  bool operator==(const StartDistribution&) const = default;
};

struct Scenario {
  std::string graph_source = "test-building";  // path, or the built-in generator
  int headcount = 100;
  StartDistribution starts;
  std::string policy = "assigned";  // assigned | shortest | signs
  std::vector<double> deltas_s = {9.0, 18.0, 36.0, 72.0, 144.0};
  int replications = 25;
  uint64_t base_seed = 1;
  std::string backend = "dijkstra";  // dijkstra | cpn
  int cpn_budget = 300;

  bool operator==(const Scenario&) const = default;
};

Scenario scenario_from_json(std::istream& in);
void scenario_to_json(const Scenario& scenario, std::ostream& out);
std::string scenario_to_json_line(const Scenario& scenario);

struct CellResult {
  int headcount = 0;
  double delta_s = 0.0;
  std::string policy;
  std::string backend;
  int replications = 0;
  std::vector<double> makespans_s;      // one per replication
  BoxStats makespan;
  double bound_s = 0.0;                 // Chen-Hung lower bound for the cell
  std::vector<double> split_errors_pp;  // empty for policies without plans
  std::optional<BoxStats> split_error;
  std::vector<double> clearance_s;      // first-floor clearance per replication
  int stuck_total = 0;

  bool operator==(const CellResult&) const = default;
};

struct ResultTable {
  std::string version = kVersion;
  Scenario scenario;
  std::vector<CellResult> cells;

  bool operator==(const ResultTable&) const = default;
};

// Seeded replication driver: one cell per time-step duration, each cell
// running `replications` plan/compile/simulate pipelines.
ResultTable run_experiment(const Scenario& scenario, const BuildingGraph& g);

// Samples `headcount` evacuees for replication `rep`. FirstFloorRooms picks
// uniformly among floor-1 room nodes; the draw depends only on
// (base_seed, headcount, rep) so policies can be compared pairwise.
std::vector<EvacueeSpec> sample_starts(const BuildingGraph& g, const Scenario& scenario,
                                       int rep);

// Lower bound on the cell's evacuation time: free-flow lead of the best
// start (at the fastest mobility speed) plus bottleneck clearing time for
// an even staircase split.
double scenario_bound_s(const BuildingGraph& g, const std::vector<size_t>& start_support,
                        int headcount, double delta_s, const MobilityModel& mobility);

void table_to_csv(const ResultTable& table, std::ostream& out);
void table_to_json(const ResultTable& table, std::ostream& out);
ResultTable table_from_json(std::istream& in);

// Serializes a parsed table in the requested format ("csv" or "json").
std::string report(const ResultTable& table, const std::string& format);

}  // namespace evac
