#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evac/graph.hpp"
#include "evac/planner.hpp"
#include "evac/rng.hpp"
#include "evac/signs.hpp"

namespace evac {

struct SimError : GraphError {
  using GraphError::GraphError;
};

// Walking speeds are uniform on [mean - half_width, mean + half_width],
// drawn once per evacuee.
struct MobilityModel {
  double mean_mps = 1.4;
  double half_width_mps = 0.1;

  double sample(Rng& rng) const;
  void validate() const;
};

enum class PolicyKind { AssignedRoute, ShortestPath, FollowSigns };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::ShortestPath;
  const std::vector<RoutePlan>* plans = nullptr;     // AssignedRoute
  const SignSchedule* schedule = nullptr;            // FollowSigns
};

struct SimConfig {
  double delta_s = kDefaultCapacityStepS;
  uint64_t seed = 0;
  MobilityModel mobility;
  bool record_trajectories = false;
  double horizon_s = 4.0 * 3600.0;  // evacuees still inside at the horizon are stuck
  int max_hops_factor = 32;         // hop cap = factor * node count
};

struct TrajectoryEvent {
  enum class Kind { Arrive, Queue, Admit, Exit };
  double time_s = 0.0;
  int evacuee = 0;
  size_t node = 0;
  Kind kind = Kind::Arrive;
};

struct SimResult {
  std::vector<std::string> evacuee_ids;
  std::vector<double> exit_time_s;  // NaN while inside
  std::vector<char> stuck;
  int stuck_count = 0;
  double makespan_s = 0.0;  // max exit time over evacuees that got out

  // Admission times per evacuee, in hop order (excludes the start node).
  std::vector<std::vector<std::pair<double, size_t>>> admissions;

  std::vector<TrajectoryEvent> trajectory;           // when recorded
  std::vector<SignFallbackEvent> sign_fallbacks;     // FollowSigns model violations

  // Seconds at which the last evacuee starting on a floor >= `floor`
  // first reached a node below it.
  std::optional<double> floor_clearance_s(const BuildingGraph& g,
                                          const std::vector<EvacueeSpec>& evacuees,
                                          int floor) const;

  // Evacuees per staircase set; an evacuee counts toward the set of the
  // last staircase node they were admitted to.
  std::map<std::string, int> staircase_usage(const BuildingGraph& g) const;

  // Admissions per (node, step), for capacity audits.
  std::map<std::pair<size_t, Step>, int> admissions_per_step(double delta_s) const;
};

// Event-driven run: evacuees walk edges at their sampled speed and queue
// FIFO at nodes, which admit at most one person per service interval
// (capacity_step_s / service_capacity seconds). Deterministic per seed.
SimResult run_simulation(const BuildingGraph& g, const std::vector<EvacueeSpec>& evacuees,
                         const PolicyConfig& policy, const SimConfig& config);

void trajectory_to_csv(const BuildingGraph& g, const SimResult& result, std::ostream& out);

}  // namespace evac
