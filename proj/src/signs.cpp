#include "evac/signs.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "evac/rng.hpp"

namespace evac {

const std::vector<DirectionBlock>* SignSchedule::blocks(size_t node, Step step) const {
  auto it = cells_.find({node, step});
  return it == cells_.end() ? nullptr : &it->second;
}

std::optional<size_t> SignSchedule::direction_at(size_t node, double time_s) const {
  Step step = static_cast<Step>(time_s / delta_s_);
  const auto* bl = blocks(node, step);
  if (!bl) return std::nullopt;
  double offset = time_s - static_cast<double>(step) * delta_s_;
  double cum = 0.0;
  for (const DirectionBlock& b : *bl) {
    cum += b.duration_s;
    if (offset < cum) return b.direction;
  }
  return bl->back().direction;
}

int SignSchedule::direction_change_count(size_t node, Step step) const {
  const auto* bl = blocks(node, step);
  return bl ? static_cast<int>(bl->size()) - 1 : 0;
}

std::optional<Step> SignSchedule::nearest_scheduled_step(size_t node, Step step) const {
  auto it = steps_by_node_.find(node);
  if (it == steps_by_node_.end() || it->second.empty()) return std::nullopt;
  const auto& steps = it->second;
  auto lo = std::lower_bound(steps.begin(), steps.end(), step);
  if (lo == steps.end()) return steps.back();
  if (*lo == step) return step;
  if (lo == steps.begin()) return *lo;
  Step after = *lo;
  Step before = *(lo - 1);
  return (step - before) <= (after - step) ? before : after;
}

SignSchedule compile_schedules(const BuildingGraph& g, const std::vector<RoutePlan>& plans,
                               double delta_s, uint64_t seed) {
  (void)g;  // directions are stored as node indices already validated by the plans
  if (delta_s <= 0.0) throw ScheduleError("time-step duration must be positive");
  SignSchedule schedule(delta_s);

  // Tally next-hops per (node, step) over every non-terminal hop.
  std::map<std::pair<size_t, Step>, std::map<size_t, int>> tally;
  for (const RoutePlan& plan : plans) {
    for (size_t h = 0; h + 1 < plan.hops.size(); ++h) {
      tally[{plan.hops[h].node, plan.hops[h].step}][plan.hops[h + 1].node] += 1;
    }
  }

  for (const auto& [cell, dirs] : tally) {
    int total = 0;
    for (const auto& [dir, count] : dirs) total += count;

    std::vector<DirectionBlock> blocks;
    for (const auto& [dir, count] : dirs) {
      blocks.push_back({dir, delta_s * count / total, count});
    }
    // Merge unresolvably short blocks into the step's largest one until
    // everything left is displayable.
    while (blocks.size() > 1) {
      auto shortest = std::min_element(blocks.begin(), blocks.end(),
                                       [](const DirectionBlock& a, const DirectionBlock& b) {
                                         return a.duration_s < b.duration_s;
                                       });
      if (shortest->duration_s >= kMinBlockDurationS) break;
      auto largest = std::max_element(blocks.begin(), blocks.end(),
                                      [](const DirectionBlock& a, const DirectionBlock& b) {
                                        return a.duration_s < b.duration_s;
                                      });
      schedule.merges_.push_back({cell.first, cell.second, shortest->direction,
                                  shortest->planned_count});
      largest->planned_count += shortest->planned_count;
      blocks.erase(shortest);
      for (DirectionBlock& b : blocks) {
        b.duration_s = delta_s * b.planned_count / total;
      }
    }

    // Signs pick the display order at random, independently per cell.
    Rng rng(mix_seed(seed, cell.first, static_cast<uint64_t>(cell.second)));
    rng.shuffle(blocks);

    schedule.steps_by_node_[cell.first].push_back(cell.second);
    schedule.cells_.emplace(cell, std::move(blocks));
  }
  return schedule;
}

void schedule_to_csv(const BuildingGraph& g, const SignSchedule& schedule,
                     std::ostream& out) {
  out << "# delta_s=" << schedule.delta_s() << "\n";
  out << "node_id,step,block_index,direction,duration_s,planned_count\n";
  char buf[64];
  for (const auto& [cell, blocks] : schedule.cells()) {
    for (size_t b = 0; b < blocks.size(); ++b) {
      std::snprintf(buf, sizeof(buf), "%.6f", blocks[b].duration_s);
      out << g.node(cell.first).id << "," << cell.second << "," << b << ","
          << g.node(blocks[b].direction).id << "," << buf << ","
          << blocks[b].planned_count << "\n";
    }
  }
}

SignSchedule schedule_from_csv(const BuildingGraph& g, std::istream& in) {
  SignSchedule schedule;
  std::string line;
  bool have_delta = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("delta_s=");
      if (pos != std::string::npos) {
        schedule.delta_s_ = std::stod(line.substr(pos + 8));
        have_delta = true;
      }
      continue;
    }
    if (line.rfind("node_id,", 0) == 0) continue;
    std::istringstream row(line);
    std::string node_id, step_s, index_s, dir_id, dur_s, count_s;
    if (!std::getline(row, node_id, ',') || !std::getline(row, step_s, ',') ||
        !std::getline(row, index_s, ',') || !std::getline(row, dir_id, ',') ||
        !std::getline(row, dur_s, ',') || !std::getline(row, count_s, ',')) {
      throw ScheduleError("malformed schedule row: " + line);
    }
    size_t node = g.index_of(node_id);
    Step step = std::stoll(step_s);
    DirectionBlock block{g.index_of(dir_id), std::stod(dur_s), std::stoi(count_s)};
    auto& blocks = schedule.cells_[{node, step}];
    size_t index = static_cast<size_t>(std::stoul(index_s));
    if (blocks.size() != index) {
      throw ScheduleError("out-of-order block index in schedule row: " + line);
    }
    blocks.push_back(block);
  }
  if (!have_delta) throw ScheduleError("schedule file is missing the '# delta_s=' header");
  for (const auto& [cell, blocks] : schedule.cells_) {
    schedule.steps_by_node_[cell.first].push_back(cell.second);
  }
  return schedule;
}

SignAdvisor::SignAdvisor(const BuildingGraph& g, const SignSchedule& schedule)
    : g_(g), schedule_(schedule), free_flow_next_(exit_next_hop(g)) {}

std::optional<size_t> SignAdvisor::advise(size_t node, double time_s,
                                          std::vector<SignFallbackEvent>* log) const {
  if (auto dir = schedule_.direction_at(node, time_s)) return dir;

  Step step = static_cast<Step>(time_s / schedule_.delta_s());
  if (auto near = schedule_.nearest_scheduled_step(node, step)) {
    // Early or late arrival relative to the plan: show the nearest
    // scheduled step's first block.
    if (log) log->push_back({SignFallbackEvent::Kind::NearestStep, time_s, node});
    return schedule_.blocks(node, *near)->front().direction;
  }
  // No plan ever passed this sign: point along the free-flow route.
  if (free_flow_next_[node] < 0) return std::nullopt;
  if (log) log->push_back({SignFallbackEvent::Kind::FreeFlow, time_s, node});
  return static_cast<size_t>(free_flow_next_[node]);
}

}  // namespace evac
