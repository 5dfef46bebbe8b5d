#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "evac/graph.hpp"

namespace evac {

using Step = int64_t;

struct CapacityExceededError : GraphError {
  using GraphError::GraphError;
};

// Per-(node, time-step) reserved-arrival counts: the congestion forecast.
// Node capacity per planning step is the graph's reference capacity scaled
// by delta_s / capacity_step_s, so the physical admission rate is the same
// whatever step duration the planner runs at.
class ReservationLedger {
 public:
  ReservationLedger(const BuildingGraph& g, double delta_s);
  ReservationLedger(std::vector<int> capacities, double delta_s);

  double delta_s() const { return delta_s_; }
  Step step_of(double time_s) const { return static_cast<Step>(time_s / delta_s_); }

  int capacity(size_t node) const;
  int reserved(size_t node, Step step) const;  // arrivals_in
  int residual(size_t node, Step step) const;

  // Smallest step >= from with spare capacity; always terminates because
  // future steps are unreserved.
  Step earliest_available(size_t node, Step from) const;

  // Books one person at (node, step). Callers must check residual (or use
  // earliest_available) first; overbooking throws.
  void reserve(size_t node, Step step);

  int64_t total_reservations() const { return total_; }

  // Sorted (node, step, reserved) cells.
  std::vector<std::tuple<size_t, Step, int>> cells() const;

  void dump_csv(const BuildingGraph& g, std::ostream& out) const;

  bool operator==(const ReservationLedger& other) const {
    return delta_s_ == other.delta_s_ && capacities_ == other.capacities_ &&
           counts_ == other.counts_;
  }

  static int scaled_capacity(int ref_capacity, double delta_s, double capacity_step_s);

 private:
  void check_node(size_t node) const;

  double delta_s_;
  std::vector<int> capacities_;                // per planning step
  std::vector<std::map<Step, int>> counts_;    // sparse, absent = 0
  int64_t total_ = 0;
};

}  // namespace evac
