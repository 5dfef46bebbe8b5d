#include "evac/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>

namespace evac {

void MobilityModel::validate() const {
  if (half_width_mps < 0.0 || mean_mps - half_width_mps <= 0.0) {
    throw SimError("mobility model bounds must leave speeds positive");
  }
}

double MobilityModel::sample(Rng& rng) const {
  if (half_width_mps == 0.0) return mean_mps;
  return rng.uniform(mean_mps - half_width_mps, mean_mps + half_width_mps);
}

namespace {

struct Arrival {
  double time;
  size_t rank;  // evacuee id rank, for deterministic ties
  int evacuee;
  size_t node;
};

struct ArrivalLater {
  bool operator()(const Arrival& a, const Arrival& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.rank > b.rank;
  }
};

}  // namespace

SimResult run_simulation(const BuildingGraph& g, const std::vector<EvacueeSpec>& evacuees,
                         const PolicyConfig& policy, const SimConfig& config) {
  config.mobility.validate();
  if (policy.kind == PolicyKind::AssignedRoute && !policy.plans) {
    throw SimError("AssignedRoute policy requires plans");
  }
  if (policy.kind == PolicyKind::FollowSigns && !policy.schedule) {
    throw SimError("FollowSigns policy requires a compiled schedule");
  }

  const size_t n = evacuees.size();
  SimResult result;
  result.evacuee_ids.reserve(n);
  for (const EvacueeSpec& e : evacuees) result.evacuee_ids.push_back(e.id);
  result.exit_time_s.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.stuck.assign(n, 0);
  result.admissions.resize(n);

  // Tie order across simultaneous events is by evacuee id.
  std::vector<size_t> rank(n);
  {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return evacuees[a].id < evacuees[b].id;
    });
    for (size_t r = 0; r < n; ++r) rank[order[r]] = r;
  }

  Rng rng(config.seed);
  std::vector<double> speed(n);
  for (size_t i = 0; i < n; ++i) speed[i] = config.mobility.sample(rng);

  // Per-evacuee routes for the fixed-route policies.
  std::vector<const RoutePlan*> plan_of(n, nullptr);
  if (policy.kind == PolicyKind::AssignedRoute) {
    std::map<std::string, const RoutePlan*> by_id;
    for (const RoutePlan& p : *policy.plans) by_id[p.evacuee_id] = &p;
    for (size_t i = 0; i < n; ++i) {
      auto it = by_id.find(evacuees[i].id);
      if (it == by_id.end()) {
        throw SimError("no assigned route for evacuee \"" + evacuees[i].id + "\"");
      }
      plan_of[i] = it->second;
    }
  }
  std::vector<std::vector<size_t>> fixed_route(n);
  if (policy.kind == PolicyKind::ShortestPath) {
    for (size_t i = 0; i < n; ++i) {
      fixed_route[i] = free_flow_shortest_path(g, evacuees[i].start).nodes;
    }
  }
  std::optional<SignAdvisor> advisor;
  if (policy.kind == PolicyKind::FollowSigns) advisor.emplace(g, *policy.schedule);

  std::vector<size_t> hop_index(n, 0);  // position within the fixed route
  std::vector<int> hops_taken(n, 0);
  const int hop_cap = config.max_hops_factor * static_cast<int>(g.node_count());

  // next_free[v]: earliest time v may admit again (service-interval pacing).
  std::vector<double> next_free(g.node_count(), 0.0);

  std::priority_queue<Arrival, std::vector<Arrival>, ArrivalLater> events;

  auto log = [&](TrajectoryEvent::Kind kind, double t, int e, size_t v) {
    if (config.record_trajectories) result.trajectory.push_back({t, e, v, kind});
  };

  // Picks the next node after admission at v (nullopt -> evacuee is stuck).
  auto next_node = [&](int e, size_t v, double t) -> std::optional<size_t> {
    switch (policy.kind) {
      case PolicyKind::AssignedRoute: {
        const auto& hops = plan_of[e]->hops;
        size_t& pos = hop_index[e];
        if (pos + 1 >= hops.size()) return std::nullopt;
        ++pos;
        return hops[pos].node;
      }
      case PolicyKind::ShortestPath: {
        const auto& route = fixed_route[e];
        size_t& pos = hop_index[e];
        if (pos + 1 >= route.size()) return std::nullopt;
        ++pos;
        return route[pos];
      }
      case PolicyKind::FollowSigns:
        return advisor->advise(v, t, &result.sign_fallbacks);
    }
    return std::nullopt;
  };

  auto depart = [&](int e, size_t u, double t) {
    auto nxt = next_node(e, u, t);
    if (!nxt) {
      result.stuck[e] = 1;
      return;
    }
    const auto& out = g.out_edges(u);
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const OutEdge& oe) { return oe.to == *nxt; });
    if (it == out.end()) {
      result.stuck[e] = 1;
      return;
    }
    if (++hops_taken[e] > hop_cap) {
      result.stuck[e] = 1;
      return;
    }
    double walk = g.edge(it->edge).length / speed[e];
    events.push({t + walk, rank[e], e, it->to});
  };

  // Evacuees start on their own node with no admission needed there.
  for (size_t i = 0; i < n; ++i) {
    const EvacueeSpec& e = evacuees[i];
    if (e.start >= g.node_count()) {
      throw UnknownNodeError("evacuee \"" + e.id + "\": unknown start node");
    }
    if (g.is_exit(e.start)) {
      throw SimError("evacuee \"" + e.id + "\" starts at an exit");
    }
    double t0 = static_cast<double>(e.available_from) * config.delta_s;
    log(TrajectoryEvent::Kind::Arrive, t0, static_cast<int>(i), e.start);
    depart(static_cast<int>(i), e.start, t0);
  }

  while (!events.empty()) {
    Arrival ev = events.top();
    events.pop();
    if (ev.time > config.horizon_s) {
      result.stuck[ev.evacuee] = 1;
      continue;
    }
    log(TrajectoryEvent::Kind::Arrive, ev.time, ev.evacuee, ev.node);
    double adm = std::max(ev.time, next_free[ev.node]);
    if (adm > ev.time) log(TrajectoryEvent::Kind::Queue, ev.time, ev.evacuee, ev.node);
    next_free[ev.node] = adm + g.service_interval_s(ev.node);
    result.admissions[ev.evacuee].push_back({adm, ev.node});
    log(TrajectoryEvent::Kind::Admit, adm, ev.evacuee, ev.node);
    if (g.is_exit(ev.node)) {
      result.exit_time_s[ev.evacuee] = adm;
      log(TrajectoryEvent::Kind::Exit, adm, ev.evacuee, ev.node);
      continue;
    }
    depart(ev.evacuee, ev.node, adm);
  }

  result.makespan_s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (std::isnan(result.exit_time_s[i])) result.stuck[i] = 1;
    if (result.stuck[i]) {
      ++result.stuck_count;
    } else {
      result.makespan_s = std::max(result.makespan_s, result.exit_time_s[i]);
    }
  }
  if (config.record_trajectories) {
    std::stable_sort(result.trajectory.begin(), result.trajectory.end(),
                     [](const TrajectoryEvent& a, const TrajectoryEvent& b) {
                       return a.time_s < b.time_s;
                     });
  }
  return result;
}

std::optional<double> SimResult::floor_clearance_s(const BuildingGraph& g,
                                                   const std::vector<EvacueeSpec>& evacuees,
                                                   int floor) const {
  double latest = 0.0;
  bool any = false;
  for (size_t i = 0; i < evacuee_ids.size(); ++i) {
    if (g.node(evacuees[i].start).floor < floor) continue;
    bool left = false;
    for (const auto& [t, v] : admissions[i]) {
      if (g.node(v).floor < floor) {
        latest = std::max(latest, t);
        left = true;
        break;
      }
    }
    if (!left) return std::nullopt;  // someone never made it below
    any = true;
  }
  if (!any) return std::nullopt;
  return latest;
}

std::map<std::string, int> SimResult::staircase_usage(const BuildingGraph& g) const {
  auto sets = staircase_sets(g);
  std::map<size_t, std::string> set_of_node;
  std::map<std::string, int> usage;
  for (const auto& [name, nodes] : sets) {
    usage[name] = 0;
    for (size_t v : nodes) set_of_node[v] = name;
  }
  for (const auto& per_evac : admissions) {
    const std::string* last = nullptr;
    for (const auto& [t, v] : per_evac) {
      auto it = set_of_node.find(v);
      if (it != set_of_node.end()) last = &it->second;
    }
    if (last) ++usage[*last];
  }
  return usage;
}

std::map<std::pair<size_t, Step>, int> SimResult::admissions_per_step(double delta_s) const {
  std::map<std::pair<size_t, Step>, int> counts;
  for (const auto& per_evac : admissions) {
    for (const auto& [t, v] : per_evac) {
      counts[{v, static_cast<Step>(t / delta_s)}] += 1;
    }
  }
  return counts;
}

void trajectory_to_csv(const BuildingGraph& g, const SimResult& result, std::ostream& out) {
  out << "time_s,evacuee_id,node_id,event\n";
  char buf[64];
  for (const TrajectoryEvent& ev : result.trajectory) {
    const char* kind = "arrive";
    switch (ev.kind) {
      case TrajectoryEvent::Kind::Arrive: kind = "arrive"; break;
      case TrajectoryEvent::Kind::Queue: kind = "queue"; break;
      case TrajectoryEvent::Kind::Admit: kind = "admit"; break;
      case TrajectoryEvent::Kind::Exit: kind = "exit"; break;
    }
    std::snprintf(buf, sizeof(buf), "%.3f", ev.time_s);
    out << buf << "," << result.evacuee_ids[ev.evacuee] << "," << g.node(ev.node).id << ","
        << kind << "\n";
  }
}

}  // namespace evac
