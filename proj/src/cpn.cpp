#include "evac/cpn.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace evac {

namespace {
constexpr double kQMax = 1.0 - 1e-6;
}

NodeRnn::NodeRnn(size_t neurons, const CpnConfig* cfg) : cfg_(cfg), n_(neurons) {
  wp_.assign(n_ * n_, cfg_->initial_weight);
  wm_.assign(n_ * n_, cfg_->initial_weight);
  for (size_t i = 0; i < n_; ++i) {
    wp_[i * n_ + i] = 0.0;
    wm_[i * n_ + i] = 0.0;
  }
  rate0_.assign(n_, 2.0 * cfg_->initial_weight * (n_ > 0 ? double(n_ - 1) : 0.0));
  q_.assign(n_, 0.5);
  solve();
}

double NodeRnn::total_rate(size_t i) const {
  double r = 0.0;
  for (size_t j = 0; j < n_; ++j) r += wp_[i * n_ + j] + wm_[i * n_ + j];
  return r;
}

size_t NodeRnn::argmax_q() const {
  size_t best = 0;
  for (size_t i = 1; i < n_; ++i) {
    if (q_[i] > q_[best]) best = i;
  }
  return best;
}

void NodeRnn::solve() {
  if (n_ == 0) return;
  std::vector<double> next(n_);
  for (int iter = 0; iter < cfg_->fp_max_iters; ++iter) {
    double worst = 0.0;
    for (size_t i = 0; i < n_; ++i) {
      double lp = cfg_->base_firing_rate;
      double ln = cfg_->base_inhibit_rate;
      for (size_t j = 0; j < n_; ++j) {
        lp += q_[j] * wp_[j * n_ + i];
        ln += q_[j] * wm_[j * n_ + i];
      }
      double f = std::min(kQMax, lp / (total_rate(i) + ln));
      next[i] = f;
      worst = std::max(worst, std::fabs(f - q_[i]));
    }
    // Stop only once the stored q satisfies the balance map itself, so
    // residual() is below tolerance on return.
    if (worst < cfg_->fp_tolerance) return;
    for (size_t i = 0; i < n_; ++i) {
      q_[i] = (1.0 - cfg_->fp_damping) * q_[i] + cfg_->fp_damping * next[i];
    }
  }
}

double NodeRnn::residual() const {
  double worst = 0.0;
  for (size_t i = 0; i < n_; ++i) {
    double lp = cfg_->base_firing_rate;
    double ln = cfg_->base_inhibit_rate;
    for (size_t j = 0; j < n_; ++j) {
      lp += q_[j] * wp_[j * n_ + i];
      ln += q_[j] * wm_[j * n_ + i];
    }
    double f = std::min(kQMax, lp / (total_rate(i) + ln));
    worst = std::max(worst, std::fabs(f - q_[i]));
  }
  return worst;
}

void NodeRnn::reinforce(size_t chosen, double reward) {
  if (!trained_) {
    threshold_ = reward;
    trained_ = true;
  }
  const bool success = reward >= threshold_;
  if (n_ > 1) {
    const double share = n_ > 2 ? reward / double(n_ - 2) : reward;
    if (success) {
      for (size_t k = 0; k < n_; ++k) {
        if (k != chosen) wp_[k * n_ + chosen] += reward;
      }
      for (size_t i = 0; i < n_; ++i) {
        for (size_t k = 0; k < n_; ++k) {
          if (k != chosen && k != i) wm_[i * n_ + k] += share;
        }
      }
    } else {
      for (size_t k = 0; k < n_; ++k) {
        if (k != chosen) wm_[k * n_ + chosen] += reward;
      }
      for (size_t i = 0; i < n_; ++i) {
        for (size_t k = 0; k < n_; ++k) {
          if (k != chosen && k != i) wp_[i * n_ + k] += share;
        }
      }
    }
    // Renormalize so each neuron keeps its original total rate.
    for (size_t i = 0; i < n_; ++i) {
      double r = total_rate(i);
      if (r <= 0.0) continue;
      double scale = rate0_[i] / r;
      for (size_t j = 0; j < n_; ++j) {
        wp_[i * n_ + j] *= scale;
        wm_[i * n_ + j] *= scale;
      }
    }
  }
  threshold_ = cfg_->threshold_smoothing * threshold_ +
               (1.0 - cfg_->threshold_smoothing) * reward;
  solve();
}

CpnEngine::CpnEngine(const BuildingGraph& g, const CpnConfig& cfg, uint64_t seed)
    : g_(g), cfg_(cfg), rng_(seed) {
  rnns_.reserve(g.node_count());
  for (size_t i = 0; i < g.node_count(); ++i) {
    rnns_.emplace_back(g.out_edges(i).size(), &cfg_);
    max_residual_ = std::max(max_residual_, rnns_.back().residual());
  }
  tables_.resize(g.node_count());
}

size_t CpnEngine::decide_next_hop(size_t node) {
  const size_t n = g_.out_edges(node).size();
  if (n == 0) throw PlanError("dead-end node \"" + g_.node(node).id + "\"");
  if (n == 1) {
    last_explored_ = false;
    return 0;
  }
  // Untrained nodes explore uniformly; trained ones keep a small element
  // of randomness.
  if (!rnns_[node].trained()) {
    last_explored_ = true;
    return static_cast<size_t>(rng_.next_below(n));
  }
  if (rng_.next_double() < cfg_.epsilon) {
    last_explored_ = true;
    return static_cast<size_t>(rng_.next_below(n));
  }
  last_explored_ = false;
  return rnns_[node].argmax_q();
}

std::optional<std::vector<size_t>> CpnEngine::launch_smart_packet(
    const ReservationLedger& ledger, size_t source, Step depart) {
  ++packets_;
  // A share of the stream roams uniformly to keep auxiliary routes alive.
  const bool roam = rng_.next_double() < cfg_.random_packet_share;
  last_packet_explored_ = roam;
  SmartPacket pkt;
  pkt.hop_budget = cfg_.hop_budget_factor * static_cast<int>(g_.node_count());
  pkt.path.push_back(source);
  pkt.metric_s = 0.0;
  std::vector<int64_t> pos_on_path(g_.node_count(), -1);
  pos_on_path[source] = 0;

  size_t u = source;
  double t = static_cast<double>(depart) * ledger.delta_s();
  while (pkt.hop_budget-- > 0) {
    if (g_.is_exit(u)) return pkt.path;
    const auto& out = g_.out_edges(u);
    if (out.empty()) return std::nullopt;
    size_t pick;
    if (roam) {
      pick = out.size() == 1 ? 0 : static_cast<size_t>(rng_.next_below(out.size()));
    } else {
      pick = decide_next_hop(u);
      last_packet_explored_ = last_packet_explored_ || last_explored_;
    }
    size_t v = out[pick].to;
    double t_arr = t + g_.edge(out[pick].edge).free_transit_time;
    Step s = ledger.step_of(t_arr);
    Step s_adm = ledger.earliest_available(v, s);
    t = s_adm == s ? t_arr : static_cast<double>(s_adm) * ledger.delta_s();
    pkt.metric_s = t - static_cast<double>(depart) * ledger.delta_s();
    if (pos_on_path[v] >= 0) {
      // Loop: erase the cycle and continue from its first occurrence.
      for (size_t k = static_cast<size_t>(pos_on_path[v]) + 1; k < pkt.path.size(); ++k) {
        pos_on_path[pkt.path[k]] = -1;
      }
      pkt.path.resize(static_cast<size_t>(pos_on_path[v]) + 1);
    } else {
      pkt.path.push_back(v);
      pos_on_path[v] = static_cast<int64_t>(pkt.path.size()) - 1;
    }
    u = v;
  }
  return g_.is_exit(u) ? std::optional<std::vector<size_t>>(pkt.path) : std::nullopt;
}

void CpnEngine::process_ack(const std::vector<size_t>& path, double metric_s,
                            const std::vector<double>* tail_metrics_s) {
  if (metric_s <= 0.0) throw PlanError("ack metric must be positive");
  ++acks_;
  // The ack travels backwards from the exit. Each node is rewarded with the
  // route time measured from itself when tails are available, so forks deep
  // in the route rank their own continuations.
  for (size_t i = path.size() - 1; i-- > 0;) {
    const double reward = cfg_.tail_metric_reward && tail_metrics_s
                              ? 1.0 / std::max((*tail_metrics_s)[i], 1e-9)
                              : 1.0 / metric_s;
    size_t u = path[i];
    const auto& out = g_.out_edges(u);
    size_t chosen = out.size();
    for (size_t k = 0; k < out.size(); ++k) {
      if (out[k].to == path[i + 1]) {
        chosen = k;
        break;
      }
    }
    if (chosen == out.size()) {
      throw PlanError("ack path uses missing edge " + g_.node(u).id + "->" +
                      g_.node(path[i + 1]).id);
    }
    rnns_[u].reinforce(chosen, reward);
    max_residual_ = std::max(max_residual_, rnns_[u].residual());

    RouteEntry entry;
    entry.path.assign(path.begin() + static_cast<int64_t>(i), path.end());
    entry.metric_s = tail_metrics_s ? (*tail_metrics_s)[i] : metric_s;
    entry.fresh = acks_;
    auto& table = tables_[u];
    auto same = std::find_if(table.begin(), table.end(), [&](const RouteEntry& e) {
      return e.path == entry.path;
    });
    if (same != table.end()) {
      *same = std::move(entry);
    } else {
      table.push_back(std::move(entry));
    }
    std::sort(table.begin(), table.end(), [](const RouteEntry& a, const RouteEntry& b) {
      if (a.metric_s != b.metric_s) return a.metric_s < b.metric_s;
      return a.path < b.path;
    });
    if (table.size() > cfg_.route_table_keep) table.resize(cfg_.route_table_keep);
  }
}

RoutePlan CpnEngine::quickest_route(const ReservationLedger& ledger, size_t start,
                                    Step depart, int budget) {
  if (budget < 1) throw PlanError("cpn packet budget must be >= 1");
  if (g_.is_exit(start)) {
    throw PlanError("cpn route start \"" + g_.node(start).id + "\" is an exit");
  }
  for (int i = 0; i < budget; ++i) {
    auto path = launch_smart_packet(ledger, start, depart);
    if (!path) continue;
    // Measure the loop-erased route under the current forecast; per-hop
    // admission times give the tail metrics for the route tables.
    std::vector<double> times;
    apply_hold_delays(g_, ledger, *path, depart, &times);
    std::vector<double> tails(path->size());
    for (size_t h = 0; h < path->size(); ++h) {
      tails[h] = std::max(times.back() - times[h], 1e-9);
    }
    double metric = std::max(times.back() - times.front(), 1e-9);
    process_ack(*path, metric, &tails);
  }

  // Re-time every known route under the current ledger and take the best.
  const RouteEntry* best = nullptr;
  RoutePlan best_plan;
  double best_time = 0.0;
  for (const RouteEntry& entry : tables_[start]) {
    RoutePlan plan = apply_hold_delays(g_, ledger, entry.path, depart);
    double t = static_cast<double>(plan.exit_step);
    if (!best || t < best_time) {
      best = &entry;
      best_plan = std::move(plan);
      best_time = t;
    }
  }
  if (!best) {
    throw NoRouteDiscoveredError("no exit route discovered from \"" + g_.node(start).id +
                                 "\" within " + std::to_string(budget) + " packets");
  }
  return best_plan;
}

std::string CpnEngine::diagnostics_json() const {
  nlohmann::json doc;
  for (size_t i = 0; i < g_.node_count(); ++i) {
    nlohmann::json entry;
    entry["q"] = rnns_[i].q();
    entry["trained"] = rnns_[i].trained();
    entry["threshold"] = rnns_[i].threshold();
    nlohmann::json routes = nlohmann::json::array();
    for (const RouteEntry& r : tables_[i]) {
      nlohmann::json jr;
      jr["metric_s"] = r.metric_s;
      jr["fresh"] = r.fresh;
      std::vector<std::string> ids;
      ids.reserve(r.path.size());
      for (size_t v : r.path) ids.push_back(g_.node(v).id);
      jr["path"] = ids;
      routes.push_back(std::move(jr));
    }
    entry["routes"] = std::move(routes);
    doc[g_.node(i).id] = std::move(entry);
  }
  return doc.dump(2);
}

}  // namespace evac
