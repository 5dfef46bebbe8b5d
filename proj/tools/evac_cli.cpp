#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "evac/cpn.hpp"
#include "evac/experiment.hpp"
#include "evac/graph.hpp"
#include "evac/ledger.hpp"
#include "evac/planner.hpp"
#include "evac/signs.hpp"
#include "evac/sim.hpp"

namespace {

using namespace evac;

void write_file(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

BuildingGraph open_graph(const std::string& source, uint64_t seed) {
  if (source == "test-building") {
    return synthesize_test_building(BuildingParams{}, seed);
  }
  return load_graph_file(source);
}

std::vector<EvacueeSpec> starts_for(const BuildingGraph& g, const std::string& starts_file,
                                    int headcount, uint64_t seed) {
  Scenario sc;
  sc.headcount = headcount;
  sc.base_seed = seed;
  if (!starts_file.empty()) {
    std::ifstream in(starts_file);
    if (!in) throw std::runtime_error("cannot open starts file: " + starts_file);
    nlohmann::json doc = nlohmann::json::parse(in);
    sc.starts.kind = StartDistribution::Kind::Explicit;
    for (const auto& je : doc) {
      sc.starts.explicit_list.push_back({je.at("id").get<std::string>(),
                                         je.at("node").get<std::string>(),
                                         je.value("available_from", Step{0})});
    }
  }
  return sample_starts(g, sc, 0);
}

std::unique_ptr<SearchBackend> make_backend(const BuildingGraph& g, const std::string& name,
                                            uint64_t seed, int budget) {
  if (name == "cpn") return std::make_unique<CpnBackend>(g, CpnConfig{}, seed, budget);
  if (name == "dijkstra") return std::make_unique<DijkstraBackend>();
  throw std::runtime_error("unknown backend \"" + name + "\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity-constrained evacuation planning, sign scheduling and simulation"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "Synthesize or validate a building graph");
  std::string gen_in, gen_out = "-";
  BuildingParams params;
  uint64_t gen_seed = 1;
  gen->add_option("--in", gen_in, "Validate and re-emit an existing graph file");
  gen->add_option("--floors", params.floors, "Floors to generate");
  gen->add_option("--rooms", params.rooms_per_floor, "Rooms per floor");
  gen->add_option("--staircases", params.staircases, "Staircase count");
  gen->add_option("--exits", params.exits, "Exit count");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--out", gen_out, "Output path (- for stdout)");

  // ---- plan ----
  auto* plan = app.add_subcommand("plan", "Run the capacity-constrained planner");
  std::string plan_graph = "test-building", plan_starts, plan_out = "-";
  std::string plan_ledger_out, plan_diag_out, plan_backend = "dijkstra";
  int plan_headcount = 100, plan_budget = 300;
  double plan_delta = 9.0;
  uint64_t plan_seed = 1;
  plan->add_option("--graph", plan_graph, "Graph file or 'test-building'");
  plan->add_option("--headcount", plan_headcount, "Evacuees to sample on floor 1");
  plan->add_option("--starts", plan_starts, "Explicit starts JSON (overrides --headcount)");
  plan->add_option("--delta", plan_delta, "Time-step duration in seconds");
  plan->add_option("--backend", plan_backend, "dijkstra or cpn");
  plan->add_option("--budget", plan_budget, "CPN packets per route query");
  plan->add_option("--seed", plan_seed, "Seed for starts and CPN exploration");
  plan->add_option("--out", plan_out, "Plans JSON output");
  plan->add_option("--ledger-out", plan_ledger_out, "Reservation ledger CSV output");
  plan->add_option("--diagnostics", plan_diag_out, "CPN diagnostics JSON output");

  // ---- signs ----
  auto* signs = app.add_subcommand("signs", "Compile plans into a sign schedule");
  std::string signs_graph = "test-building", signs_plans, signs_out = "-";
  double signs_delta = 9.0;
  uint64_t signs_seed = 1;
  signs->add_option("--graph", signs_graph, "Graph file or 'test-building'");
  signs->add_option("--plans", signs_plans, "Plans JSON from 'plan'")->required();
  signs->add_option("--delta", signs_delta, "Time-step duration in seconds");
  signs->add_option("--seed", signs_seed, "Block-order shuffle seed");
  signs->add_option("--out", signs_out, "Schedule CSV output");

  // ---- sim ----
  auto* sim = app.add_subcommand("sim", "Run one simulation");
  std::string sim_graph = "test-building", sim_policy = "shortest";
  std::string sim_plans, sim_schedule, sim_starts, sim_out = "-", sim_traj;
  int sim_headcount = 100;
  double sim_delta = 9.0, sim_speed_mean = 1.4, sim_speed_width = 0.1;
  uint64_t sim_seed = 1;
  sim->add_option("--graph", sim_graph, "Graph file or 'test-building'");
  sim->add_option("--policy", sim_policy, "assigned, shortest or signs");
  sim->add_option("--plans", sim_plans, "Plans JSON (assigned policy)");
  sim->add_option("--schedule", sim_schedule, "Schedule CSV (signs policy)");
  sim->add_option("--headcount", sim_headcount, "Evacuees to sample on floor 1");
  sim->add_option("--starts", sim_starts, "Explicit starts JSON");
  sim->add_option("--delta", sim_delta, "Time-step duration in seconds");
  sim->add_option("--seed", sim_seed, "Simulation seed");
  sim->add_option("--speed-mean", sim_speed_mean, "Mean walking speed m/s");
  sim->add_option("--speed-width", sim_speed_width, "Speed half-width m/s");
  sim->add_option("--out", sim_out, "Result JSON output");
  sim->add_option("--trajectories", sim_traj, "Trajectory CSV output");

  // ---- exp ----
  auto* exp = app.add_subcommand("exp", "Run a replicated experiment sweep");
  std::string exp_scenario, exp_graph, exp_policy, exp_backend, exp_out = "-";
  std::string exp_format = "csv";
  std::vector<double> exp_deltas;
  int exp_headcount = -1, exp_reps = -1;
  int64_t exp_seed = -1;
  exp->add_option("--scenario", exp_scenario, "Scenario JSON file");
  exp->add_option("--graph", exp_graph, "Override graph source");
  exp->add_option("--headcount", exp_headcount, "Override headcount");
  exp->add_option("--delta", exp_deltas, "Override time-step grid (repeatable)");
  exp->add_option("--policy", exp_policy, "Override policy");
  exp->add_option("--backend", exp_backend, "Override backend");
  exp->add_option("--reps", exp_reps, "Override replications");
  exp->add_option("--seed", exp_seed, "Override base seed");
  exp->add_option("--format", exp_format, "csv or json");
  exp->add_option("--out", exp_out, "Output path (- for stdout)");

  // ---- report ----
  auto* rep = app.add_subcommand("report", "Re-serialize a result table");
  std::string rep_in, rep_out = "-", rep_format = "csv";
  rep->add_option("--in", rep_in, "Result table JSON from 'exp --format json'")->required();
  rep->add_option("--format", rep_format, "csv or json");
  rep->add_option("--out", rep_out, "Output path (- for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      BuildingGraph g = gen_in.empty() ? synthesize_test_building(params, gen_seed)
                                       : load_graph_file(gen_in);
      write_file(gen_out, save_graph_string(g));
    } else if (plan->parsed()) {
      BuildingGraph g = open_graph(plan_graph, 1);
      auto evacuees = starts_for(g, plan_starts, plan_headcount, plan_seed);
      auto backend = make_backend(g, plan_backend, mix_seed(plan_seed, 0x504Cu), plan_budget);
      PlanResult result = plan_all(g, evacuees, plan_delta, *backend);
      std::ostringstream plans_json;
      plans_to_json(g, result.plans, plans_json);
      write_file(plan_out, plans_json.str());
      if (!plan_ledger_out.empty()) {
        std::ostringstream ledger_csv;
        result.ledger.dump_csv(g, ledger_csv);
        write_file(plan_ledger_out, ledger_csv.str());
      }
      if (!plan_diag_out.empty()) {
        if (auto* cpn = dynamic_cast<CpnBackend*>(backend.get())) {
          write_file(plan_diag_out, cpn->engine().diagnostics_json());
        } else {
          throw std::runtime_error("--diagnostics requires --backend cpn");
        }
      }
    } else if (signs->parsed()) {
      BuildingGraph g = open_graph(signs_graph, 1);
      std::ifstream in(signs_plans);
      if (!in) throw std::runtime_error("cannot open plans file: " + signs_plans);
      auto plans = plans_from_json(g, in);
      SignSchedule schedule = compile_schedules(g, plans, signs_delta, signs_seed);
      std::ostringstream csv;
      schedule_to_csv(g, schedule, csv);
      write_file(signs_out, csv.str());
    } else if (sim->parsed()) {
      BuildingGraph g = open_graph(sim_graph, 1);
      auto evacuees = starts_for(g, sim_starts, sim_headcount, sim_seed);
      SimConfig cfg;
      cfg.delta_s = sim_delta;
      cfg.seed = mix_seed(sim_seed, 0x534Du);
      cfg.mobility = {sim_speed_mean, sim_speed_width};
      cfg.record_trajectories = !sim_traj.empty();

      std::vector<RoutePlan> plans;
      SignSchedule schedule;
      PolicyConfig policy;
      if (sim_policy == "assigned") {
        std::ifstream in(sim_plans);
        if (!in) throw std::runtime_error("assigned policy requires --plans");
        plans = plans_from_json(g, in);
        policy = {PolicyKind::AssignedRoute, &plans, nullptr};
      } else if (sim_policy == "signs") {
        std::ifstream in(sim_schedule);
        if (!in) throw std::runtime_error("signs policy requires --schedule");
        schedule = schedule_from_csv(g, in);
        policy = {PolicyKind::FollowSigns, nullptr, &schedule};
      } else if (sim_policy == "shortest") {
        policy = {PolicyKind::ShortestPath, nullptr, nullptr};
      } else {
        throw std::runtime_error("unknown policy \"" + sim_policy + "\"");
      }
      SimResult result = run_simulation(g, evacuees, policy, cfg);

      nlohmann::json doc;
      doc["makespan_s"] = result.makespan_s;
      doc["stuck"] = result.stuck_count;
      doc["sign_fallbacks"] = result.sign_fallbacks.size();
      nlohmann::json exits = nlohmann::json::object();
      for (size_t i = 0; i < result.evacuee_ids.size(); ++i) {
        exits[result.evacuee_ids[i]] = result.exit_time_s[i];
      }
      doc["exit_times_s"] = std::move(exits);
      nlohmann::json stairs = nlohmann::json::object();
      for (const auto& [name, count] : result.staircase_usage(g)) stairs[name] = count;
      doc["staircase_usage"] = std::move(stairs);
      if (auto clear = result.floor_clearance_s(g, evacuees, 1)) {
        doc["first_floor_clearance_s"] = *clear;
      }
      write_file(sim_out, doc.dump(2) + "\n");
      if (!sim_traj.empty()) {
        std::ostringstream csv;
        trajectory_to_csv(g, result, csv);
        write_file(sim_traj, csv.str());
      }
    } else if (exp->parsed()) {
      Scenario sc;
      if (!exp_scenario.empty()) {
        std::ifstream in(exp_scenario);
        if (!in) throw std::runtime_error("cannot open scenario file: " + exp_scenario);
        sc = scenario_from_json(in);
      }
      if (!exp_graph.empty()) sc.graph_source = exp_graph;
      if (exp_headcount >= 0) sc.headcount = exp_headcount;
      if (!exp_deltas.empty()) sc.deltas_s = exp_deltas;
      if (!exp_policy.empty()) sc.policy = exp_policy;
      if (!exp_backend.empty()) sc.backend = exp_backend;
      if (exp_reps >= 0) sc.replications = exp_reps;
      if (exp_seed >= 0) sc.base_seed = static_cast<uint64_t>(exp_seed);
      BuildingGraph g = open_graph(sc.graph_source, 1);
      ResultTable table = run_experiment(sc, g);
      write_file(exp_out, report(table, exp_format));
    } else if (rep->parsed()) {
      std::ifstream in(rep_in);
      if (!in) throw std::runtime_error("cannot open result table: " + rep_in);
      ResultTable table = table_from_json(in);
      write_file(rep_out, report(table, rep_format));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
