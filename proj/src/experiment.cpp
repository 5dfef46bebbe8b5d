#include "evac/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "evac/cpn.hpp"
#include "evac/signs.hpp"
#include "json.hpp"

namespace evac {

namespace {

using nlohmann::json;

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

double quantile_inclusive(const std::vector<double>& sorted, double p) {
  if (sorted.size() == 1) return sorted[0];
  double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw ExperimentError("box_stats needs at least one value");
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.min = values.front();
  s.q1 = quantile_inclusive(values, 0.25);
  s.median = quantile_inclusive(values, 0.5);
  s.q3 = quantile_inclusive(values, 0.75);
  s.max = values.back();
  return s;
}

SplitError staircase_split_error(const BuildingGraph& g, const std::vector<RoutePlan>& plans,
                                 const SimResult& result) {
  auto sets = staircase_sets(g);
  if (sets.size() != 2) {
    throw ExperimentError("staircase split needs exactly two staircase sets, found " +
                          std::to_string(sets.size()));
  }
  const std::string& first = sets.begin()->first;
  std::map<size_t, std::string> set_of_node;
  for (const auto& [name, nodes] : sets) {
    for (size_t v : nodes) set_of_node[v] = name;
  }

  int planned_first = 0, planned_total = 0;
  for (const RoutePlan& plan : plans) {
    const std::string* last = nullptr;
    for (const Hop& h : plan.hops) {
      auto it = set_of_node.find(h.node);
      if (it != set_of_node.end()) last = &it->second;
    }
    if (!last) continue;
    ++planned_total;
    if (*last == first) ++planned_first;
  }

  auto usage = result.staircase_usage(g);
  int realized_first = usage.count(first) ? usage.at(first) : 0;
  int realized_total = 0;
  for (const auto& [name, count] : usage) realized_total += count;

  if (planned_total == 0 || realized_total == 0) {
    throw ExperimentError("zero staircase traffic");
  }
  SplitError err;
  err.planned_pct = 100.0 * planned_first / planned_total;
  err.realized_pct = 100.0 * realized_first / realized_total;
  err.error_pp = err.realized_pct - err.planned_pct;
  return err;
}

std::vector<EvacueeSpec> sample_starts(const BuildingGraph& g, const Scenario& scenario,
                                       int rep) {
  std::vector<EvacueeSpec> evacuees;
  if (scenario.starts.kind == StartDistribution::Kind::Explicit) {
    for (const ExplicitStart& e : scenario.starts.explicit_list) {
      evacuees.push_back({e.evacuee_id, g.index_of(e.node_id), e.available_from});
    }
    return evacuees;
  }

  std::vector<size_t> support;
  for (size_t i = 0; i < g.node_count(); ++i) {
    if (g.node(i).floor == 1 && g.node(i).label.rfind("room:", 0) == 0) {
      support.push_back(i);
    }
  }
  if (support.empty()) {
    throw ExperimentError("graph has no floor-1 room nodes to start evacuees on");
  }
  Rng rng(mix_seed(scenario.base_seed, 0x5354u, static_cast<uint64_t>(scenario.headcount),
                   static_cast<uint64_t>(rep)));
  size_t width = std::max<size_t>(3, std::to_string(scenario.headcount).size());
  for (int i = 0; i < scenario.headcount; ++i) {
    std::string digits = std::to_string(i);
    size_t pad = width > digits.size() ? width - digits.size() : 0;
    evacuees.push_back({"e" + std::string(pad, '0') + digits,
                        support[rng.next_below(support.size())], 0});
  }
  return evacuees;
}

double scenario_bound_s(const BuildingGraph& g, const std::vector<size_t>& start_support,
                        int headcount, double delta_s, const MobilityModel& mobility) {
  std::vector<double> dist = exit_distance_s(g);
  double lead_nominal = std::numeric_limits<double>::infinity();
  for (size_t s : start_support) lead_nominal = std::min(lead_nominal, dist[s]);
  if (std::isinf(lead_nominal)) throw ExperimentError("bound: no start can reach an exit");
  // Free-flow costs assume the nominal speed; the fastest walker shortens
  // the lead proportionally.
  double vmax = mobility.mean_mps + mobility.half_width_mps;
  double lead = lead_nominal * kNominalWalkSpeedMps / vmax;

  auto sets = staircase_sets(g);
  if (sets.empty()) return lead;
  double t_max = 0.0;
  for (const auto& [name, nodes] : sets) {
    for (size_t v : nodes) {
      int cap = ReservationLedger::scaled_capacity(g.node(v).service_capacity, delta_s,
                                                   g.capacity_step_s());
      t_max = std::max(t_max, delta_s / cap);
    }
  }
  int per_stair = (headcount + static_cast<int>(sets.size()) - 1) / static_cast<int>(sets.size());
  return chen_hung_bound(lead, t_max, per_stair);
}

ResultTable run_experiment(const Scenario& scenario, const BuildingGraph& g) {
  if (scenario.replications < 1) throw ExperimentError("replications must be >= 1");
  for (double d : scenario.deltas_s) {
    if (d <= 0.0) throw ExperimentError("time-step durations must be positive");
  }
  if (scenario.policy != "assigned" && scenario.policy != "shortest" &&
      scenario.policy != "signs") {
    throw ExperimentError("unknown policy \"" + scenario.policy + "\"");
  }
  if (scenario.backend != "dijkstra" && scenario.backend != "cpn") {
    throw ExperimentError("unknown backend \"" + scenario.backend + "\"");
  }

  ResultTable table;
  table.scenario = scenario;

  const bool has_two_staircases = staircase_sets(g).size() == 2;

  for (double delta : scenario.deltas_s) {
    CellResult cell;
    cell.headcount = scenario.headcount;
    cell.delta_s = delta;
    cell.policy = scenario.policy;
    cell.backend = scenario.policy == "shortest" ? "" : scenario.backend;
    cell.replications = scenario.replications;

    std::vector<size_t> support_union;
    for (int rep = 0; rep < scenario.replications; ++rep) {
      std::vector<EvacueeSpec> evacuees = sample_starts(g, scenario, rep);
      for (const EvacueeSpec& e : evacuees) support_union.push_back(e.start);

      SimConfig sim_cfg;
      sim_cfg.delta_s = delta;
      sim_cfg.seed = mix_seed(scenario.base_seed, 0x534Du,
                              static_cast<uint64_t>(scenario.headcount),
                              static_cast<uint64_t>(rep));

      std::vector<RoutePlan> plans;
      SimResult result;
      if (scenario.policy == "shortest") {
        PolicyConfig policy{PolicyKind::ShortestPath, nullptr, nullptr};
        result = run_simulation(g, evacuees, policy, sim_cfg);
      } else {
        uint64_t plan_seed = mix_seed(scenario.base_seed, 0x504Cu, static_cast<uint64_t>(rep),
                                      static_cast<uint64_t>(delta * 1000.0));
        std::unique_ptr<SearchBackend> backend;
        if (scenario.backend == "cpn") {
          backend = std::make_unique<CpnBackend>(g, CpnConfig{}, plan_seed,
                                                 scenario.cpn_budget);
        } else {
          backend = std::make_unique<DijkstraBackend>();
        }
        plans = plan_all(g, evacuees, delta, *backend).plans;
        if (scenario.policy == "assigned") {
          PolicyConfig policy{PolicyKind::AssignedRoute, &plans, nullptr};
          result = run_simulation(g, evacuees, policy, sim_cfg);
        } else {
          uint64_t sign_seed = mix_seed(scenario.base_seed, 0x5347u,
                                        static_cast<uint64_t>(rep),
                                        static_cast<uint64_t>(delta * 1000.0));
          SignSchedule schedule = compile_schedules(g, plans, delta, sign_seed);
          PolicyConfig policy{PolicyKind::FollowSigns, nullptr, &schedule};
          result = run_simulation(g, evacuees, policy, sim_cfg);
        }
      }

      cell.makespans_s.push_back(result.makespan_s);
      cell.stuck_total += result.stuck_count;
      if (!plans.empty() && has_two_staircases && result.stuck_count == 0) {
        cell.split_errors_pp.push_back(staircase_split_error(g, plans, result).error_pp);
      }
      if (auto clear = result.floor_clearance_s(g, evacuees, 1)) {
        cell.clearance_s.push_back(*clear);
      }
    }

    std::sort(support_union.begin(), support_union.end());
    support_union.erase(std::unique(support_union.begin(), support_union.end()),
                        support_union.end());
    cell.makespan = box_stats(cell.makespans_s);
    cell.bound_s = scenario_bound_s(g, support_union, scenario.headcount, delta,
                                    SimConfig{}.mobility);
    if (!cell.split_errors_pp.empty()) {
      cell.split_error = box_stats(cell.split_errors_pp);
    }
    table.cells.push_back(std::move(cell));
  }
  return table;
}

Scenario scenario_from_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  try {
    s.graph_source = doc.value("graph", s.graph_source);
    s.headcount = doc.value("headcount", s.headcount);
    s.policy = doc.value("policy", s.policy);
    if (doc.contains("deltas_s")) s.deltas_s = doc.at("deltas_s").get<std::vector<double>>();
    s.replications = doc.value("replications", s.replications);
    s.base_seed = doc.value("base_seed", s.base_seed);
    s.backend = doc.value("backend", s.backend);
    s.cpn_budget = doc.value("cpn_budget", s.cpn_budget);
    if (doc.contains("starts")) {
      const json& js = doc.at("starts");
      std::string kind = js.value("kind", "first-floor");
      if (kind == "first-floor") {
        s.starts.kind = StartDistribution::Kind::FirstFloorRooms;
      } else if (kind == "explicit") {
        s.starts.kind = StartDistribution::Kind::Explicit;
        for (const auto& je : js.at("evacuees")) {
          s.starts.explicit_list.push_back({je.at("id").get<std::string>(),
                                            je.at("node").get<std::string>(),
                                            je.value("available_from", Step{0})});
        }
        s.headcount = static_cast<int>(s.starts.explicit_list.size());
      } else {
        throw ExperimentError("unknown start distribution kind \"" + kind + "\"");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario field error: ") + e.what());
  }
  return s;
}

namespace {

json scenario_json(const Scenario& s) {
  json doc;
  doc["graph"] = s.graph_source;
  doc["headcount"] = s.headcount;
  doc["policy"] = s.policy;
  doc["deltas_s"] = s.deltas_s;
  doc["replications"] = s.replications;
  doc["base_seed"] = s.base_seed;
  doc["backend"] = s.backend;
  doc["cpn_budget"] = s.cpn_budget;
  if (s.starts.kind == StartDistribution::Kind::Explicit) {
    json evs = json::array();
    for (const ExplicitStart& e : s.starts.explicit_list) {
      evs.push_back({{"id", e.evacuee_id},
                     {"node", e.node_id},
                     {"available_from", e.available_from}});
    }
    doc["starts"] = {{"kind", "explicit"}, {"evacuees", std::move(evs)}};
  } else {
    doc["starts"] = {{"kind", "first-floor"}};
  }
  return doc;
}

}  // namespace

void scenario_to_json(const Scenario& scenario, std::ostream& out) {
  out << scenario_json(scenario).dump(2) << "\n";
}

std::string scenario_to_json_line(const Scenario& scenario) {
  return scenario_json(scenario).dump();
}

void table_to_csv(const ResultTable& table, std::ostream& out) {
  out << "# evac-results v" << table.version << "\n";
  out << "# scenario: " << scenario_to_json_line(table.scenario) << "\n";
  out << "headcount,delta_s,policy,backend,replications,makespan_min_s,makespan_q1_s,"
         "makespan_median_s,makespan_q3_s,makespan_max_s,bound_s,split_err_median_pp,"
         "split_err_iqr_pp,clearance_median_s,stuck\n";
  for (const CellResult& c : table.cells) {
    out << c.headcount << "," << fmt(c.delta_s) << "," << c.policy << "," << c.backend << ","
        << c.replications << "," << fmt(c.makespan.min) << "," << fmt(c.makespan.q1) << ","
        << fmt(c.makespan.median) << "," << fmt(c.makespan.q3) << "," << fmt(c.makespan.max)
        << "," << fmt(c.bound_s) << ",";
    if (c.split_error) {
      out << fmt(c.split_error->median) << "," << fmt(c.split_error->iqr());
    } else {
      out << ",";
    }
    out << ",";
    if (!c.clearance_s.empty()) out << fmt(box_stats(c.clearance_s).median);
    out << "," << c.stuck_total << "\n";
  }
}

void table_to_json(const ResultTable& table, std::ostream& out) {
  json doc;
  doc["version"] = table.version;
  doc["scenario"] = scenario_json(table.scenario);
  json cells = json::array();
  for (const CellResult& c : table.cells) {
    json jc;
    jc["headcount"] = c.headcount;
    jc["delta_s"] = c.delta_s;
    jc["policy"] = c.policy;
    jc["backend"] = c.backend;
    jc["replications"] = c.replications;
    jc["makespans_s"] = c.makespans_s;
    jc["bound_s"] = c.bound_s;
    jc["split_errors_pp"] = c.split_errors_pp;
    jc["clearance_s"] = c.clearance_s;
    jc["stuck_total"] = c.stuck_total;
    cells.push_back(std::move(jc));
  }
  doc["cells"] = std::move(cells);
  out << doc.dump(2) << "\n";
}

ResultTable table_from_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("result table is not valid JSON: ") + e.what());
  }
  ResultTable table;
  try {
    table.version = doc.at("version").get<std::string>();
    {
      std::stringstream ss;
      ss << doc.at("scenario").dump();
      table.scenario = scenario_from_json(ss);
    }
    for (const auto& jc : doc.at("cells")) {
      CellResult c;
      c.headcount = jc.at("headcount").get<int>();
      c.delta_s = jc.at("delta_s").get<double>();
      c.policy = jc.at("policy").get<std::string>();
      c.backend = jc.at("backend").get<std::string>();
      c.replications = jc.at("replications").get<int>();
      c.makespans_s = jc.at("makespans_s").get<std::vector<double>>();
      c.bound_s = jc.at("bound_s").get<double>();
      c.split_errors_pp = jc.at("split_errors_pp").get<std::vector<double>>();
      c.clearance_s = jc.at("clearance_s").get<std::vector<double>>();
      c.stuck_total = jc.at("stuck_total").get<int>();
      c.makespan = box_stats(c.makespans_s);
      if (!c.split_errors_pp.empty()) c.split_error = box_stats(c.split_errors_pp);
      table.cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("result table field error: ") + e.what());
  }
  return table;
}

std::string report(const ResultTable& table, const std::string& format) {
  std::ostringstream out;
  if (format == "csv") {
    table_to_csv(table, out);
  } else if (format == "json") {
    table_to_json(table, out);
  } else {
    throw ExperimentError("unknown report format \"" + format + "\"");
  }
  return out.str();
}

}  // namespace evac
