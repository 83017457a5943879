#pragma once

// Independent reference solvers: a whole-network concave solve of the max-flow
// program (direct_maxflow) and a brute-force grid search over per-node power
// splits with a classical augmenting-path max-flow evaluator (grid_maxflow).
// These deliberately share no machinery with the layer-by-layer algorithms
// beyond the rate function, so they can serve as verification oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "ehflow/convex.hpp"
#include "ehflow/errors.hpp"
#include "ehflow/network.hpp"
#include "ehflow/rate.hpp"

namespace ehflow {

struct OracleReport {
  double flow = 0.0;
  std::vector<double> rates;   // per edge of the input network
  std::vector<double> powers;  // per edge transmit powers
  std::string method;         // "direct" or "grid"
  double resolution = 0.0;    // grid only
  double certified_gap = 0.0; // direct only
  bool converged = true;
};

namespace detail {

// Edges that can carry positive rate: from-node has positive (or unbounded)
// power and is fed from the source through other alive edges.
template <class Net>
std::vector<bool> alive_edges(const Net& net) {
  std::vector<bool> alive(net.edge_count(), false);
  std::vector<bool> fed(net.node_count(), false);
  fed[net.source] = true;
  for (int u : net.topo) {
    if (!fed[u]) continue;
    const Power& pu = net.powers[u];
    if (pu.is_finite() && pu.watts <= 0.0) continue;
    for (int e : net.out_edges[u]) {
      alive[e] = true;
      fed[net.edges[e].to] = true;
    }
  }
  return alive;
}

}  // namespace detail

// Global concave solve of the max-flow program in rate space: variables are
// all edge rates jointly; constraints are per-node power budgets, flow
// conservation (in >= out) at intermediate nodes, and nonnegativity. With
// mac=true, joint (rate, power) variables are used and every intermediate
// receiver's incoming edges satisfy Gaussian MAC subset constraints (added
// lazily); the destination's incoming links stay orthogonal.
template <class Net>
OracleReport direct_maxflow(const Net& net, double epsilon = kDefaultEpsilon, bool mac = false) {
  OracleReport rep;
  rep.method = "direct";
  rep.rates.assign(net.edge_count(), 0.0);
  rep.powers.assign(net.edge_count(), 0.0);

  auto alive = detail::alive_edges(net);
  std::vector<int> var_of(net.edge_count(), -1);
  std::vector<int> edge_of;
  for (int e = 0; e < net.edge_count(); ++e)
    if (alive[e]) {
      var_of[e] = static_cast<int>(edge_of.size());
      edge_of.push_back(e);
    }
  const int n = static_cast<int>(edge_of.size());
  if (n == 0) return rep;

  auto rate_var = [&](int v) { return v; };
  auto power_var = [&](int v) { return n + v; };
  const int dim = mac ? 2 * n : n;

  std::vector<detail::Constraint> cons;
  std::vector<double> rwall(n);
  for (int v = 0; v < n; ++v) {
    const Power& pu = net.powers[net.edges[edge_of[v]].from];
    rwall[v] = pu.is_finite() ? RateFunction::evaluate(pu.watts) + 1.0 : 60.0;
    cons.push_back(detail::Constraint::lower_bound(rate_var(v)));
    cons.push_back(detail::Constraint::upper_bound(rate_var(v), rwall[v]));
    if (mac) {
      double pwall = pu.is_finite() ? pu.watts + 1.0 : RateFunction::invert(rwall[v]) + 1.0;
      cons.push_back(detail::Constraint::lower_bound(power_var(v)));
      cons.push_back(detail::Constraint::upper_bound(power_var(v), pwall));
    }
  }
  // Per-node budgets.
  for (int u = 0; u < net.node_count(); ++u) {
    if (!net.powers[u].is_finite()) continue;
    std::vector<int> rvars, pvars;
    for (int e : net.out_edges[u])
      if (var_of[e] >= 0) {
        rvars.push_back(rate_var(var_of[e]));
        if (mac) pvars.push_back(power_var(var_of[e]));
      }
    if (rvars.empty()) continue;
    if (mac)
      cons.push_back(detail::Constraint::linear(pvars, std::vector<double>(pvars.size(), 1.0),
                                                net.powers[u].watts));
    else
      cons.push_back(detail::Constraint::power_sum(rvars, net.powers[u].watts));
  }
  // Conservation at intermediate nodes: sum(out) - sum(in) <= 0.
  for (int u = 0; u < net.node_count(); ++u) {
    if (u == net.source || u == net.destination) continue;
    std::vector<int> vars;
    std::vector<double> coef;
    bool has_out = false;
    for (int e : net.out_edges[u])
      if (var_of[e] >= 0) {
        vars.push_back(rate_var(var_of[e]));
        coef.push_back(1.0);
        has_out = true;
      }
    if (!has_out) continue;
    for (int e : net.in_edges[u])
      if (var_of[e] >= 0) {
        vars.push_back(rate_var(var_of[e]));
        coef.push_back(-1.0);
      }
    cons.push_back(detail::Constraint::linear(vars, coef, 0.0));
  }
  // MAC constraints: point-to-point caps on every edge; subset caps at
  // intermediate receivers (seeded with the full set, refined lazily).
  std::vector<std::vector<int>> recv;
  std::set<std::pair<int, unsigned long>> added;
  if (mac) {
    for (int v = 0; v < n; ++v)
      cons.push_back(detail::Constraint::mac_cap({rate_var(v)}, {power_var(v)}));
    recv.assign(net.node_count(), {});
    for (int v = 0; v < n; ++v) {
      int head = net.edges[edge_of[v]].to;
      if (head != net.destination) recv[head].push_back(v);
    }
    for (int u = 0; u < net.node_count(); ++u) {
      if (recv[u].size() > 20) throw TooLarge("mac receiver with in-degree > 20");
      if (recv[u].size() > 1) {
        std::vector<int> rv, pv;
        for (int v : recv[u]) {
          rv.push_back(rate_var(v));
          pv.push_back(power_var(v));
        }
        cons.push_back(detail::Constraint::mac_cap(rv, pv));
        added.insert({u, (1ul << recv[u].size()) - 1});
      }
    }
  }

  // Strictly feasible start: rates decay along the topological order so that
  // inflow strictly exceeds outflow at every intermediate node.
  std::vector<int> pos(net.node_count(), 0);
  for (size_t i = 0; i < net.topo.size(); ++i) pos[net.topo[i]] = static_cast<int>(i);
  int max_out = 1;
  for (int u = 0; u < net.node_count(); ++u)
    max_out = std::max(max_out, static_cast<int>(net.out_edges[u].size()));
  const double beta = 1.0 / (max_out + 2.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  for (int v = 0; v < n; ++v) {
    int u = net.edges[edge_of[v]].from;
    x[rate_var(v)] = 1e-3 * std::pow(beta, pos[u]);
    if (mac) {
      const Power& pu = net.powers[u];
      int deg = 0;
      for (int e : net.out_edges[u])
        if (var_of[e] >= 0) ++deg;
      x[power_var(v)] = pu.is_finite() ? pu.watts / (2.0 * deg) : 1.0;
    }
  }
  for (int h = 0; h < 120 && !detail::strictly_feasible(x, cons); ++h)
    for (int v = 0; v < n; ++v) x[rate_var(v)] *= 0.5;
  if (!detail::strictly_feasible(x, cons)) return rep;

  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  for (int v = 0; v < n; ++v)
    if (net.edges[edge_of[v]].to == net.destination) c[rate_var(v)] = 1.0;

  detail::BarrierResult res;
  for (int round = 0; round < 40; ++round) {
    res = detail::barrier_maximize(c, cons, x, epsilon);
    if (!mac) break;
    bool violated = false;
    for (int u = 0; u < net.node_count(); ++u) {
      const auto& rv = recv[u];
      if (rv.size() < 2) continue;
      unsigned long full = (1ul << rv.size()) - 1;
      double worst = 1e-9;
      unsigned long worst_mask = 0;
      for (unsigned long mask = 1; mask <= full; ++mask) {
        if (added.count({u, mask})) continue;
        double rs = 0.0, ps = 0.0;
        for (size_t a = 0; a < rv.size(); ++a)
          if (mask & (1ul << a)) {
            rs += res.x[rate_var(rv[a])];
            ps += res.x[power_var(rv[a])];
          }
        double viol = rs - RateFunction::evaluate(ps);
        if (viol > worst) {
          worst = viol;
          worst_mask = mask;
        }
      }
      if (worst_mask && added.insert({u, worst_mask}).second) {
        std::vector<int> rv2, pv2;
        for (size_t a = 0; a < rv.size(); ++a)
          if (worst_mask & (1ul << a)) {
            rv2.push_back(rate_var(rv[a]));
            pv2.push_back(power_var(rv[a]));
          }
        cons.push_back(detail::Constraint::mac_cap(rv2, pv2));
        violated = true;
      }
    }
    if (!violated) break;
    x = res.x;
    for (int h = 0; h < 120 && !detail::strictly_feasible(x, cons); ++h)
      for (int v = 0; v < n; ++v) x[rate_var(v)] *= 0.5;
    if (!detail::strictly_feasible(x, cons)) break;
  }

  if (!res.converged)
    throw NonConvergence("direct_maxflow exhausted its iteration budget");
  for (int v = 0; v < n; ++v) {
    rep.rates[edge_of[v]] = std::max(0.0, res.x[rate_var(v)]);
    rep.powers[edge_of[v]] = mac ? std::max(0.0, res.x[power_var(v)])
                                 : RateFunction::invert(rep.rates[edge_of[v]]);
  }
  rep.flow = 0.0;
  for (int e : net.in_edges[net.destination]) rep.flow += rep.rates[e];
  rep.certified_gap = res.certified_gap;
  rep.converged = res.converged;
  return rep;
}

namespace detail {

// Classical max-flow (shortest augmenting paths) on fixed real capacities.
inline double edmonds_karp(int n, int s, int t, const std::vector<Edge>& edges,
                           const std::vector<double>& cap) {
  struct Arc {
    int to;
    double cap;
    int rev;
  };
  std::vector<std::vector<Arc>> g(n);
  for (size_t e = 0; e < edges.size(); ++e) {
    g[edges[e].from].push_back({edges[e].to, cap[e], static_cast<int>(g[edges[e].to].size())});
    g[edges[e].to].push_back({edges[e].from, 0.0, static_cast<int>(g[edges[e].from].size()) - 1});
  }
  double flow = 0.0;
  while (true) {
    std::vector<int> prev_node(n, -1), prev_arc(n, -1);
    std::vector<int> q{s};
    prev_node[s] = s;
    for (size_t h = 0; h < q.size() && prev_node[t] < 0; ++h) {
      int u = q[h];
      for (size_t a = 0; a < g[u].size(); ++a) {
        const Arc& arc = g[u][a];
        if (arc.cap > 1e-12 && prev_node[arc.to] < 0) {
          prev_node[arc.to] = u;
          prev_arc[arc.to] = static_cast<int>(a);
          q.push_back(arc.to);
        }
      }
    }
    if (prev_node[t] < 0) break;
    double push = std::numeric_limits<double>::infinity();
    for (int v = t; v != s; v = prev_node[v]) push = std::min(push, g[prev_node[v]][prev_arc[v]].cap);
    if (!(push > 1e-12)) break;
    for (int v = t; v != s; v = prev_node[v]) {
      Arc& arc = g[prev_node[v]][prev_arc[v]];
      arc.cap -= push;
      g[arc.to][arc.rev].cap += push;
    }
    flow += push;
  }
  return flow;
}

}  // namespace detail

// Brute-force oracle: enumerate per-node power splits on a shrinking grid (the
// end-to-end flow is concave in the power vector, so window refinement around
// the incumbent is sound) and evaluate each candidate with a classical
// augmenting-path max-flow over the induced edge capacities.
template <class Net>
OracleReport grid_maxflow(const Net& net, double resolution) {
  if (!(resolution > 0)) throw Error("grid resolution must be positive");
  OracleReport rep;
  rep.method = "grid";
  rep.resolution = resolution;
  rep.rates.assign(net.edge_count(), 0.0);
  rep.powers.assign(net.edge_count(), 0.0);

  int finite_edges = 0;
  for (int e = 0; e < net.edge_count(); ++e)
    if (net.powers[net.edges[e].from].is_finite()) ++finite_edges;
  if (finite_edges > 10) throw TooLarge("grid oracle supports at most 10 finite-power edges");

  const double big = 1e9;
  std::vector<double> cap(net.edge_count(), 0.0);
  // Nodes whose split must be searched (finite power, >= 2 outgoing edges).
  struct SplitNode {
    int node;
    std::vector<int> edges;
    double budget;
    std::vector<double> center;
  };
  std::vector<SplitNode> splits;
  for (int u = 0; u < net.node_count(); ++u) {
    const Power& pu = net.powers[u];
    if (!pu.is_finite()) {
      for (int e : net.out_edges[u]) cap[e] = big;
      continue;
    }
    if (net.out_edges[u].size() == 1) {
      cap[net.out_edges[u][0]] = RateFunction::evaluate(pu.watts);
    } else if (net.out_edges[u].size() > 1) {
      SplitNode sn;
      sn.node = u;
      sn.edges = net.out_edges[u];
      sn.budget = pu.watts;
      sn.center.assign(sn.edges.size(), pu.watts / sn.edges.size());
      splits.push_back(sn);
    }
  }

  auto evaluate = [&]() {
    return detail::edmonds_karp(net.node_count(), net.source, net.destination, net.edges, cap);
  };

  if (splits.empty()) {
    rep.flow = evaluate();
    return rep;
  }

  double h = 0.0;
  for (const auto& sn : splits) h = std::max(h, sn.budget / 8.0);
  if (h <= 0.0) {
    rep.flow = evaluate();
    return rep;
  }

  // Candidate splits of one node within +-2h of its center at step h.
  auto candidates = [&](const SplitNode& sn, double step) {
    std::vector<std::vector<double>> out;
    const size_t d = sn.edges.size();
    std::vector<double> cur(d, 0.0);
    std::function<void(size_t, double)> rec = [&](size_t i, double used) {
      double lo = std::max(0.0, sn.center[i] - 2.0 * step);
      double hi = std::min(sn.budget, sn.center[i] + 2.0 * step);
      if (i + 1 == d) {
        double rest = sn.budget - used;
        if (rest >= lo - 1e-12 && rest <= hi + 1e-12) {
          cur[i] = std::max(0.0, rest);
          out.push_back(cur);
        }
        return;
      }
      for (double v = lo; v <= hi + 1e-12; v += step) {
        if (used + v > sn.budget + 1e-12) break;
        cur[i] = v;
        rec(i + 1, used + v);
      }
    };
    rec(0, 0.0);
    return out;
  };

  double best = -1.0;
  while (true) {
    std::vector<std::vector<std::vector<double>>> cand;
    size_t combos = 1;
    for (const auto& sn : splits) {
      cand.push_back(candidates(sn, h));
      combos *= std::max<size_t>(1, cand.back().size());
      if (combos > 2000000) throw TooLarge("grid oracle enumeration budget exceeded");
    }
    std::vector<size_t> pick(splits.size(), 0);
    std::vector<std::vector<double>> best_split(splits.size());
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == splits.size()) {
        for (size_t a = 0; a < splits.size(); ++a)
          for (size_t b = 0; b < splits[a].edges.size(); ++b)
            cap[splits[a].edges[b]] = RateFunction::evaluate(cand[a][pick[a]][b]);
        double v = evaluate();
        if (v > best) {
          best = v;
          for (size_t a = 0; a < splits.size(); ++a) best_split[a] = cand[a][pick[a]];
        }
        return;
      }
      for (pick[i] = 0; pick[i] < cand[i].size(); ++pick[i]) rec(i + 1);
    };
    rec(0);
    for (size_t a = 0; a < splits.size(); ++a)
      if (!best_split[a].empty()) splits[a].center = best_split[a];
    if (h <= resolution) break;
    h = std::max(resolution, h / 2.0);
  }
  rep.flow = std::max(0.0, best);
  return rep;
}

}  // namespace ehflow
