#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evac/graph.hpp"
#include "evac/planner.hpp"

namespace evac {

struct ScheduleError : GraphError {
  using GraphError::GraphError;
};

// Blocks shorter than this are merged into the step's largest block; a
// physical sign cannot flicker through sub-second directions.
constexpr double kMinBlockDurationS = 1.0;

struct DirectionBlock {
  size_t direction = 0;    // next-hop node index
  double duration_s = 0.0;
  int planned_count = 0;

  bool operator==(const DirectionBlock&) const = default;
};

// A block merged away because its share of the step was unresolvably short.
struct MergeEvent {
  size_t node = 0;
  Step step = 0;
  size_t direction = 0;
  int count = 0;
};

// Per (node, step): the ordered direction blocks one dynamic sign displays.
class SignSchedule {
 public:
  SignSchedule() = default;
  explicit SignSchedule(double delta_s) : delta_s_(delta_s) {}

  double delta_s() const { return delta_s_; }

  const std::vector<DirectionBlock>* blocks(size_t node, Step step) const;

  // Active direction by offset within the step. Strict: nullopt when the
  // (node, step) cell has no schedule; use SignAdvisor for fallbacks.
  std::optional<size_t> direction_at(size_t node, double time_s) const;

  int direction_change_count(size_t node, Step step) const;

  // Scheduled step nearest to `step` for this node (ties -> earlier).
  std::optional<Step> nearest_scheduled_step(size_t node, Step step) const;

  const std::map<std::pair<size_t, Step>, std::vector<DirectionBlock>>& cells() const {
    return cells_;
  }
  const std::vector<MergeEvent>& merges() const { return merges_; }

  friend SignSchedule compile_schedules(const BuildingGraph& g,
                                        const std::vector<RoutePlan>& plans,
                                        double delta_s, uint64_t seed);
  friend SignSchedule schedule_from_csv(const BuildingGraph& g, std::istream& in);

 private:
  double delta_s_ = 0.0;
  std::map<std::pair<size_t, Step>, std::vector<DirectionBlock>> cells_;
  std::map<size_t, std::vector<Step>> steps_by_node_;  // sorted
  std::vector<MergeEvent> merges_;
};

// Groups identical next-hops per (node, step), sizes each block's display
// duration by its share of the step's reservations, and shuffles block
// order with a per-cell seeded generator.
SignSchedule compile_schedules(const BuildingGraph& g, const std::vector<RoutePlan>& plans,
                               double delta_s, uint64_t seed);

void schedule_to_csv(const BuildingGraph& g, const SignSchedule& schedule, std::ostream& out);
SignSchedule schedule_from_csv(const BuildingGraph& g, std::istream& in);

// A sign consultation that had to fall back outside the compiled schedule.
struct SignFallbackEvent {
  enum class Kind { NearestStep, FreeFlow };
  Kind kind;
  double time_s = 0.0;
  size_t node = 0;
};

// Wraps a schedule with the fallbacks an installed sign would apply: the
// nearest scheduled step's first block for early/late arrivals, and the
// free-flow direction where no plan ever passed.
class SignAdvisor {
 public:
  SignAdvisor(const BuildingGraph& g, const SignSchedule& schedule);

  // Next hop for an evacuee walking past `node` at `time_s`. nullopt only
  // for dead ends. Fallback uses are appended to `log` when non-null.
  std::optional<size_t> advise(size_t node, double time_s,
                               std::vector<SignFallbackEvent>* log) const;

 private:
  const BuildingGraph& g_;
  const SignSchedule& schedule_;
  std::vector<int32_t> free_flow_next_;
};

}  // namespace evac
