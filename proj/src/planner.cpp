#include "evac/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace evac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Admission time at `node` for a walker arriving at `t_arr` seconds: stay in
// the arrival step if it has spare capacity, otherwise wait in place until
// the start of the earliest step that does.
double admission_time(const ReservationLedger& ledger, size_t node, double t_arr,
                      Step* step_out) {
  Step s = ledger.step_of(t_arr);
  Step s_adm = ledger.earliest_available(node, s);
  *step_out = s_adm;
  return s_adm == s ? t_arr : static_cast<double>(s_adm) * ledger.delta_s();
}

}  // namespace

RoutePlan quickest_route(const BuildingGraph& g, const ReservationLedger& ledger,
                         size_t start, Step depart) {
  if (g.is_exit(start)) {
    throw PlanError("quickest_route start \"" + g.node(start).id + "\" is an exit");
  }
  const double t0 = static_cast<double>(depart) * ledger.delta_s();

  std::vector<double> best(g.node_count(), kInf);
  std::vector<Step> best_step(g.node_count(), 0);
  std::vector<int64_t> pred(g.node_count(), -1);
  std::vector<char> done(g.node_count(), 0);

  // (admission time, id rank) keeps pop order deterministic.
  using Item = std::tuple<double, size_t, size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  best[start] = t0;
  best_step[start] = depart;
  pq.push({t0, g.id_rank(start), start});

  size_t reached_exit = g.node_count();
  while (!pq.empty()) {
    auto [t, rank, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (g.is_exit(u)) {
      reached_exit = u;
      break;
    }
    for (const OutEdge& oe : g.out_edges(u)) {
      if (done[oe.to]) continue;
      double t_arr = t + g.edge(oe.edge).free_transit_time;
      Step s_adm;
      double t_adm = admission_time(ledger, oe.to, t_arr, &s_adm);
      if (t_adm < best[oe.to] ||
          (t_adm == best[oe.to] && pred[oe.to] >= 0 &&
           g.id_rank(u) < g.id_rank(static_cast<size_t>(pred[oe.to])))) {
        best[oe.to] = t_adm;
        best_step[oe.to] = s_adm;
        pred[oe.to] = static_cast<int64_t>(u);
        pq.push({t_adm, g.id_rank(oe.to), oe.to});
      }
    }
  }
  if (reached_exit == g.node_count()) {
    throw NoExitReachableError("no exit reachable from \"" + g.node(start).id + "\"");
  }

  RoutePlan plan;
  for (size_t v = reached_exit;; v = static_cast<size_t>(pred[v])) {
    plan.hops.push_back({v, best_step[v]});
    if (v == start) break;
  }
  std::reverse(plan.hops.begin(), plan.hops.end());
  plan.exit = reached_exit;
  plan.exit_step = best_step[reached_exit];
  return plan;
}

RoutePlan apply_hold_delays(const BuildingGraph& g, const ReservationLedger& ledger,
                            const std::vector<size_t>& path, Step depart,
                            std::vector<double>* admission_times_s) {
  if (path.size() < 2) throw PlanError("route must have at least two nodes");
  if (g.is_exit(path.front())) throw PlanError("route starts at an exit");
  if (!g.is_exit(path.back())) throw PlanError("route does not end at an exit");

  RoutePlan plan;
  double t = static_cast<double>(depart) * ledger.delta_s();
  plan.hops.push_back({path.front(), depart});
  if (admission_times_s) {
    admission_times_s->clear();
    admission_times_s->push_back(t);
  }
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    size_t u = path[i];
    size_t v = path[i + 1];
    const auto& out = g.out_edges(u);
    auto it = std::find_if(out.begin(), out.end(),
                           [v](const OutEdge& oe) { return oe.to == v; });
    if (it == out.end()) {
      throw PlanError("route uses missing edge " + g.node(u).id + "->" + g.node(v).id);
    }
    double t_arr = t + g.edge(it->edge).free_transit_time;
    Step s_adm;
    t = admission_time(ledger, v, t_arr, &s_adm);
    plan.hops.push_back({v, s_adm});
    if (admission_times_s) admission_times_s->push_back(t);
  }
  plan.exit = path.back();
  plan.exit_step = plan.hops.back().step;
  return plan;
}

double chen_hung_bound(double lead_time_s, double t_max_s, int n) {
  if (n < 1) throw PlanError("chen_hung_bound requires n >= 1");
  if (t_max_s <= 0.0) throw PlanError("chen_hung_bound requires t_max > 0");
  return lead_time_s + static_cast<double>(n - 1) * t_max_s;
}

PlanResult plan_all(const BuildingGraph& g, const std::vector<EvacueeSpec>& evacuees,
                    double delta_s, SearchBackend& backend) {
  if (evacuees.empty()) throw PlanError("plan_all requires at least one evacuee");
  for (const EvacueeSpec& e : evacuees) {
    if (e.start >= g.node_count()) {
      throw UnknownNodeError("evacuee \"" + e.id + "\": unknown start node");
    }
    if (g.is_exit(e.start)) {
      throw PlanError("evacuee \"" + e.id + "\" starts at an exit");
    }
  }

  ReservationLedger ledger(g, delta_s);

  // Evacuees sharing (start, depart) share a route query; keep each group's
  // members ordered by id so ties assign the smallest id first.
  std::map<std::pair<size_t, Step>, std::vector<std::string>> groups;
  for (const EvacueeSpec& e : evacuees) {
    groups[{e.start, e.available_from}].push_back(e.id);
  }
  for (auto& [key, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
      throw PlanError("duplicate evacuee id \"" +
                      *std::adjacent_find(ids.begin(), ids.end()) + "\"");
    }
  }

  struct Cached {
    RoutePlan plan;
    std::pair<size_t, Step> key;
  };
  // Min-heap on (exit_step, next evacuee id). Cached routes can only get
  // worse as reservations accumulate, so a popped entry whose cells all
  // still have spare capacity is both valid and globally minimal.
  auto cmp = [](const std::pair<std::pair<Step, std::string>, size_t>& a,
                const std::pair<std::pair<Step, std::string>, size_t>& b) {
    return a.first > b.first;
  };
  std::priority_queue<std::pair<std::pair<Step, std::string>, size_t>,
                      std::vector<std::pair<std::pair<Step, std::string>, size_t>>,
                      decltype(cmp)>
      heap(cmp);
  std::vector<Cached> cache;

  auto push_group = [&](const std::pair<size_t, Step>& key) {
    RoutePlan plan = backend.quickest_route(g, ledger, key.first, key.second);
    cache.push_back({std::move(plan), key});
    heap.push({{cache.back().plan.exit_step, groups[key].front()}, cache.size() - 1});
  };

  for (const auto& [key, ids] : groups) push_group(key);

  PlanResult result{{}, ledger};
  result.plans.reserve(evacuees.size());
  while (!heap.empty()) {
    auto [prio, idx] = heap.top();
    heap.pop();
    const auto key = cache[idx].key;
    auto& ids = groups[key];
    RoutePlan& plan = cache[idx].plan;
    bool stale = false;
    for (size_t h = 1; h < plan.hops.size(); ++h) {
      if (result.ledger.residual(plan.hops[h].node, plan.hops[h].step) < 1) {
        stale = true;
        break;
      }
    }
    if (stale) {
      plan = backend.quickest_route(g, result.ledger, key.first, key.second);
      heap.push({{plan.exit_step, ids.front()}, idx});
      continue;
    }

    RoutePlan assigned = plan;
    assigned.evacuee_id = ids.front();
    ids.erase(ids.begin());
    for (size_t h = 1; h < assigned.hops.size(); ++h) {
      result.ledger.reserve(assigned.hops[h].node, assigned.hops[h].step);
    }
    result.plans.push_back(std::move(assigned));
    if (!ids.empty()) {
      // Reuse the cached route lazily; the staleness check above recomputes
      // it if this assignment consumed the last unit on one of its cells.
      heap.push({{plan.exit_step, ids.front()}, idx});
    }
  }
  return result;
}

ReservationLedger replay_ledger(const BuildingGraph& g, double delta_s,
                                const std::vector<RoutePlan>& plans) {
  ReservationLedger ledger(g, delta_s);
  for (const RoutePlan& plan : plans) {
    for (size_t h = 1; h < plan.hops.size(); ++h) {
      ledger.reserve(plan.hops[h].node, plan.hops[h].step);
    }
  }
  return ledger;
}

void plans_to_json(const BuildingGraph& g, const std::vector<RoutePlan>& plans,
                   std::ostream& out) {
  nlohmann::json doc = nlohmann::json::array();
  for (const RoutePlan& plan : plans) {
    nlohmann::json hops = nlohmann::json::array();
    for (const Hop& h : plan.hops) {
      hops.push_back({{"node", g.node(h.node).id}, {"step", h.step}});
    }
    doc.push_back({{"evacuee_id", plan.evacuee_id},
                   {"hops", std::move(hops)},
                   {"exit", g.node(plan.exit).id},
                   {"exit_step", plan.exit_step}});
  }
  out << doc.dump(2) << "\n";
}

std::vector<RoutePlan> plans_from_json(const BuildingGraph& g, std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plan document is not valid JSON: ") + e.what());
  }
  std::vector<RoutePlan> plans;
  try {
    for (const auto& jp : doc) {
      RoutePlan plan;
      plan.evacuee_id = jp.at("evacuee_id").get<std::string>();
      for (const auto& jh : jp.at("hops")) {
        plan.hops.push_back(
            {g.index_of(jh.at("node").get<std::string>()), jh.at("step").get<Step>()});
      }
      plan.exit = g.index_of(jp.at("exit").get<std::string>());
      plan.exit_step = jp.at("exit_step").get<Step>();
      plans.push_back(std::move(plan));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plan document field error: ") + e.what());
  }
  return plans;
}

}  // namespace evac
