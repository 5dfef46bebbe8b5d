#include "evac/ledger.hpp"

#include <cmath>
#include <ostream>
#include <tuple>

namespace evac {

int ReservationLedger::scaled_capacity(int ref_capacity, double delta_s,
                                       double capacity_step_s) {
  double scaled = ref_capacity * delta_s / capacity_step_s;
  return std::max(1, static_cast<int>(std::floor(scaled + 1e-9)));
}

ReservationLedger::ReservationLedger(const BuildingGraph& g, double delta_s)
    : delta_s_(delta_s) {
  if (delta_s_ <= 0.0) throw ValidationError("time-step duration must be positive");
  capacities_.reserve(g.node_count());
  for (size_t i = 0; i < g.node_count(); ++i) {
    capacities_.push_back(
        scaled_capacity(g.node(i).service_capacity, delta_s_, g.capacity_step_s()));
  }
  counts_.resize(capacities_.size());
}

ReservationLedger::ReservationLedger(std::vector<int> capacities, double delta_s)
    : delta_s_(delta_s), capacities_(std::move(capacities)) {
  if (delta_s_ <= 0.0) throw ValidationError("time-step duration must be positive");
  for (size_t i = 0; i < capacities_.size(); ++i) {
    if (capacities_[i] < 1) {
      throw ValidationError("ledger capacity must be >= 1 (node index " +
                            std::to_string(i) + ")");
    }
  }
  counts_.resize(capacities_.size());
}

void ReservationLedger::check_node(size_t node) const {
  if (node >= capacities_.size()) {
    throw UnknownNodeError("unknown node index " + std::to_string(node));
  }
}

int ReservationLedger::capacity(size_t node) const {
  check_node(node);
  return capacities_[node];
}

int ReservationLedger::reserved(size_t node, Step step) const {
  check_node(node);
  auto it = counts_[node].find(step);
  return it == counts_[node].end() ? 0 : it->second;
}

int ReservationLedger::residual(size_t node, Step step) const {
  return capacity(node) - reserved(node, step);
}

Step ReservationLedger::earliest_available(size_t node, Step from) const {
  check_node(node);
  const auto& series = counts_[node];
  Step t = from;
  for (auto it = series.lower_bound(from); it != series.end() && it->first == t; ++it, ++t) {
    if (it->second < capacities_[node]) return t;
  }
  return t;
}

void ReservationLedger::reserve(size_t node, Step step) {
  check_node(node);
  int& cell = counts_[node][step];
  if (cell >= capacities_[node]) {
    throw CapacityExceededError("capacity exceeded at node index " + std::to_string(node) +
                                ", step " + std::to_string(step));
  }
  ++cell;
  ++total_;
}

std::vector<std::tuple<size_t, Step, int>> ReservationLedger::cells() const {
  std::vector<std::tuple<size_t, Step, int>> out;
  for (size_t v = 0; v < counts_.size(); ++v) {
    for (const auto& [step, count] : counts_[v]) {
      if (count > 0) out.emplace_back(v, step, count);
    }
  }
  return out;
}

void ReservationLedger::dump_csv(const BuildingGraph& g, std::ostream& out) const {
  out << "node_id,step,reserved,capacity\n";
  for (const auto& [v, step, count] : cells()) {
    out << g.node(v).id << "," << step << "," << count << "," << capacities_[v] << "\n";
  }
}

}  // namespace evac
