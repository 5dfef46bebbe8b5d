#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "evac/graph.hpp"
#include "evac/ledger.hpp"

namespace evac {

struct PlanError : GraphError {
  using GraphError::GraphError;
};

struct EvacueeSpec {
  std::string id;
  size_t start = 0;          // node index; must not be an exit
  Step available_from = 0;   // first step the evacuee can move
};

struct Hop {
  size_t node = 0;
  Step step = 0;  // admission step at this node

  bool operator==(const Hop&) const = default;
};

// One evacuee's source route with scheduled per-node admission steps.
struct RoutePlan {
  std::string evacuee_id;
  std::vector<Hop> hops;  // hops.front() is the start (no reservation there)
  size_t exit = 0;
  Step exit_step = 0;

  bool operator==(const RoutePlan&) const = default;
};

// Congestion-aware quickest route. Arrival times accumulate continuously
// along edges; at every node past the start, arrival is pushed into the
// earliest time-step with spare reserved capacity (hold-in-place). Makes no
// reservations itself.
RoutePlan quickest_route(const BuildingGraph& g, const ReservationLedger& ledger,
                         size_t start, Step depart);

// Applies the hold-delay recurrence to a fixed node sequence; returns the
// timed plan. Path must start at a non-exit and end at an exit. When given,
// admission_times_s receives the continuous per-hop admission times.
RoutePlan apply_hold_delays(const BuildingGraph& g, const ReservationLedger& ledger,
                            const std::vector<size_t>& path, Step depart,
                            std::vector<double>* admission_times_s = nullptr);

// Strategy handle shared by the congestion-Dijkstra and CPN searches.
class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  virtual RoutePlan quickest_route(const BuildingGraph& g, const ReservationLedger& ledger,
                                   size_t start, Step depart) = 0;
  virtual std::string name() const = 0;
};

class DijkstraBackend final : public SearchBackend {
 public:
  RoutePlan quickest_route(const BuildingGraph& g, const ReservationLedger& ledger,
                           size_t start, Step depart) override {
    return evac::quickest_route(g, ledger, start, depart);
  }
  std::string name() const override { return "dijkstra"; }
};

struct PlanResult {
  std::vector<RoutePlan> plans;  // in assignment order
  ReservationLedger ledger;
};

// CCRP loop: repeatedly route the evacuee who can exit earliest, assign,
// and reserve one unit of capacity at every hop past the start. Routes are
// memoized per start until a reservation lands on one of their cells.
PlanResult plan_all(const BuildingGraph& g, const std::vector<EvacueeSpec>& evacuees,
                    double delta_s, SearchBackend& backend);

// T_P(n) = T_P(1) + (n - 1) * t_max.
double chen_hung_bound(double lead_time_s, double t_max_s, int n);

// Rebuilds a ledger from plans (reserving every hop past the first).
ReservationLedger replay_ledger(const BuildingGraph& g, double delta_s,
                                const std::vector<RoutePlan>& plans);

void plans_to_json(const BuildingGraph& g, const std::vector<RoutePlan>& plans,
                   std::ostream& out);
std::vector<RoutePlan> plans_from_json(const BuildingGraph& g, std::istream& in);

}  // namespace evac
