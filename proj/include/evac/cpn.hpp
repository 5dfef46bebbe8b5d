#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evac/graph.hpp"
#include "evac/ledger.hpp"
#include "evac/planner.hpp"
#include "evac/rng.hpp"

namespace evac {

struct NoRouteDiscoveredError : GraphError {
  using GraphError::GraphError;
};

struct CpnConfig {
  double epsilon = 0.05;             // exploration probability per hop
  double random_packet_share = 0.2;  // packets that roam uniformly end to end
  double threshold_smoothing = 0.8;  // a in T <- a*T + (1-a)*R
  bool tail_metric_reward = true;    // reward each node with its remaining time
  double base_firing_rate = 1.0;     // external excitatory input per neuron
  double base_inhibit_rate = 0.1;    // external inhibitory input per neuron
  double initial_weight = 1.0;
  int hop_budget_factor = 4;         // hop budget = factor * node count
  double fp_tolerance = 1e-8;
  int fp_max_iters = 20000;
  double fp_damping = 0.5;
  size_t route_table_keep = 4;       // best routes retained per node
};

// Random neural network for one graph node: one neuron per outgoing edge.
// Steady-state firing probabilities q solve the balance fixed point
//   q_i = min(1-eps, lp_i / (r_i + ln_i)),
//   lp_i = sum_j q_j w+(j,i) + base_firing,  ln_i = sum_j q_j w-(j,i) + base_inhibit,
//   r_i  = sum_j (w+(i,j) + w-(i,j)).
class NodeRnn {
 public:
  NodeRnn(size_t neurons, const CpnConfig* cfg);

  size_t size() const { return n_; }
  const std::vector<double>& q() const { return q_; }
  size_t argmax_q() const;  // ties -> smallest neuron index
  bool trained() const { return trained_; }
  double threshold() const { return threshold_; }
  double w_plus(size_t i, size_t j) const { return wp_[i * n_ + j]; }
  double w_minus(size_t i, size_t j) const { return wm_[i * n_ + j]; }
  double total_rate(size_t i) const;

  // Threshold comparison, weight update, rate renormalization, re-solve.
  void reinforce(size_t chosen, double reward);

  // Residual of q against the clamped balance map.
  double residual() const;

 private:
  void solve();

  const CpnConfig* cfg_;
  size_t n_;
  std::vector<double> wp_, wm_;  // row-major (i -> j), zero diagonal
  std::vector<double> q_;
  std::vector<double> rate0_;    // per-neuron total rate preserved by updates
  double threshold_ = 0.0;
  bool trained_ = false;
};

struct SmartPacket {
  std::vector<size_t> path;  // loop-erased so far
  int hop_budget = 0;
  double metric_s = 0.0;  // running congestion-aware time (pre-erasure)
};

struct RouteEntry {
  std::vector<size_t> path;  // this node -> exit
  double metric_s = 0.0;
  int64_t fresh = 0;  // ack counter at last update
};

// CPN search backend: smart packets explore the graph guided by per-node
// RNNs; acknowledgements of discovered exit paths train the RNNs and fill
// per-node route tables. State stays warm across queries in one session.
class CpnEngine {
 public:
  CpnEngine(const BuildingGraph& g, const CpnConfig& cfg, uint64_t seed);

  // Epsilon-greedy next-hop choice (index into out_edges of `node`).
  size_t decide_next_hop(size_t node);

  // Random walk from source; returns the loop-erased path on reaching an
  // exit, nothing on hop-budget exhaustion.
  std::optional<std::vector<size_t>> launch_smart_packet(const ReservationLedger& ledger,
                                                         size_t source, Step depart);

  // Backward ack: applies the reward along the reverse path and upserts
  // route-table entries. tail_metrics_s[i], when given, is the remaining
  // time from path[i] to the exit.
  void process_ack(const std::vector<size_t>& path, double metric_s,
                   const std::vector<double>* tail_metrics_s = nullptr);

  // Sends a stream of `budget` packets, then converts the best discovered
  // route into a timed plan under the current ledger.
  RoutePlan quickest_route(const ReservationLedger& ledger, size_t start, Step depart,
                           int budget);

  const NodeRnn& rnn(size_t node) const { return rnns_[node]; }
  const std::vector<RouteEntry>& routes(size_t node) const { return tables_[node]; }
  double max_fp_residual() const { return max_residual_; }
  int64_t packets_sent() const { return packets_; }
  int64_t acks_delivered() const { return acks_; }

  // True when any hop of the most recent packet was exploratory (or the
  // packet roamed uniformly end to end).
  bool last_packet_explored() const { return last_packet_explored_; }

  std::string diagnostics_json() const;

 private:
  const BuildingGraph& g_;
  CpnConfig cfg_;
  Rng rng_;
  std::vector<NodeRnn> rnns_;
  std::vector<std::vector<RouteEntry>> tables_;
  double max_residual_ = 0.0;
  int64_t packets_ = 0;
  int64_t acks_ = 0;
  bool last_explored_ = false;
  bool last_packet_explored_ = false;
};

class CpnBackend final : public SearchBackend {
 public:
  CpnBackend(const BuildingGraph& g, const CpnConfig& cfg, uint64_t seed, int budget)
      : engine_(g, cfg, seed), budget_(budget) {}

  RoutePlan quickest_route(const BuildingGraph& g, const ReservationLedger& ledger,
                           size_t start, Step depart) override {
    (void)g;
    return engine_.quickest_route(ledger, start, depart, budget_);
  }
  std::string name() const override { return "cpn"; }

  CpnEngine& engine() { return engine_; }

 private:
  CpnEngine engine_;
  int budget_;
};

}  // namespace evac
