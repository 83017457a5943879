#pragma once

// Single-layer-pair concave subproblem: maximize the sum of left-node rates
// subject to incoming caps f_i, outgoing caps g_j, per-node power budgets
// sum_j (2^{r_ij} - 1) <= P_i, and (in mac-mode) Gaussian multiple-access
// subset constraints on each right node's incoming edges.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "ehflow/convex.hpp"
#include "ehflow/errors.hpp"
#include "ehflow/network.hpp"
#include "ehflow/rate.hpp"

namespace ehflow {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct LayerEdge {
  int left = 0;   // index into LayerProblem::f / powers
  int right = 0;  // index into LayerProblem::g
};

struct LayerProblem {
  std::vector<double> f;       // incoming caps per left node (kUnbounded allowed)
  std::vector<Power> powers;   // budgets per left node
  std::vector<double> g;       // outgoing caps per right node (kUnbounded allowed)
  std::vector<LayerEdge> edges;
  bool mac_mode = false;
};

struct LayerSolution {
  std::vector<double> rates;       // per edge
  std::vector<double> edge_powers; // per edge (invert(r) in orthogonal mode; primal in mac mode)
  std::vector<double> left_rate;   // per left node: sum of its edge rates
  std::vector<double> right_rate;  // per right node: sum of its incoming edge rates
  double objective = 0.0;
  long iterations = 0;
  double feasibility_slack = 0.0;  // max positive constraint violation (0 when feasible)
  bool converged = true;
};

namespace detail {

inline void check_layer_problem(const LayerProblem& p) {
  const int nl = static_cast<int>(p.f.size());
  const int nr = static_cast<int>(p.g.size());
  if (p.powers.size() != p.f.size()) throw Error("layer problem: f/powers size mismatch");
  std::vector<bool> lhas(nl, false), rhas(nr, false);
  for (const auto& e : p.edges) {
    if (e.left < 0 || e.left >= nl || e.right < 0 || e.right >= nr)
      throw Error("layer problem: edge index out of range");
    lhas[e.left] = true;
    rhas[e.right] = true;
  }
  for (int i = 0; i < nl; ++i) {
    if (!lhas[i]) throw Error("layer problem: left node without outgoing edge");
    if (p.f[i] < 0) throw Error("layer problem: negative f");
    if (p.powers[i].is_finite() && p.powers[i].watts < 0) throw NegativePower("layer problem");
  }
  for (int j = 0; j < nr; ++j) {
    if (!rhas[j]) throw Error("layer problem: right node without incoming edge");
    if (p.g[j] < 0) throw Error("layer problem: negative g");
  }
}

// Upper wall for an edge rate: loose bound above any attainable value.
inline double rate_wall(const LayerProblem& p, const LayerEdge& e) {
  double w = 60.0;
  if (std::isfinite(p.f[e.left])) w = std::min(w, p.f[e.left]);
  if (std::isfinite(p.g[e.right])) w = std::min(w, p.g[e.right]);
  if (p.powers[e.left].is_finite()) w = std::min(w, RateFunction::evaluate(p.powers[e.left].watts));
  return w + 1.0;
}

inline LayerSolution zero_solution(const LayerProblem& p) {
  LayerSolution s;
  s.rates.assign(p.edges.size(), 0.0);
  s.edge_powers.assign(p.edges.size(), 0.0);
  s.left_rate.assign(p.f.size(), 0.0);
  s.right_rate.assign(p.g.size(), 0.0);
  return s;
}

inline void fill_totals(const LayerProblem& p, LayerSolution& s) {
  s.left_rate.assign(p.f.size(), 0.0);
  s.right_rate.assign(p.g.size(), 0.0);
  for (size_t e = 0; e < p.edges.size(); ++e) {
    s.left_rate[p.edges[e].left] += s.rates[e];
    s.right_rate[p.edges[e].right] += s.rates[e];
  }
  s.objective = 0.0;
  for (double r : s.left_rate) s.objective += r;
}

// Max positive violation over the true (non-wall) constraints.
inline double layer_slack(const LayerProblem& p, const LayerSolution& s) {
  double worst = 0.0;
  for (size_t i = 0; i < p.f.size(); ++i) {
    if (std::isfinite(p.f[i])) worst = std::max(worst, s.left_rate[i] - p.f[i]);
    if (p.powers[i].is_finite()) {
      double used = 0.0;
      for (size_t e = 0; e < p.edges.size(); ++e)
        if (p.edges[e].left == static_cast<int>(i)) used += s.edge_powers[e];
      worst = std::max(worst, used - p.powers[i].watts);
    }
  }
  for (size_t j = 0; j < p.g.size(); ++j)
    if (std::isfinite(p.g[j])) worst = std::max(worst, s.right_rate[j] - p.g[j]);
  return std::max(0.0, worst);
}

}  // namespace detail

// Orthogonal-links layer solve (Eq.-(10)-style program in rate space).
inline LayerSolution layer_opt(const LayerProblem& p, double epsilon = kDefaultEpsilon) {
  detail::check_layer_problem(p);

  // Drop edges that can only carry zero rate.
  std::vector<int> var_of(p.edges.size(), -1);
  std::vector<int> edge_of;
  for (size_t e = 0; e < p.edges.size(); ++e) {
    const auto& ed = p.edges[e];
    bool dead = p.f[ed.left] <= 0.0 || p.g[ed.right] <= 0.0 ||
                (p.powers[ed.left].is_finite() && p.powers[ed.left].watts <= 0.0);
    if (!dead) {
      var_of[e] = static_cast<int>(edge_of.size());
      edge_of.push_back(static_cast<int>(e));
    }
  }
  const int n = static_cast<int>(edge_of.size());
  if (n == 0) return detail::zero_solution(p);

  std::vector<detail::Constraint> cons;
  std::vector<double> wall(n);
  for (int v = 0; v < n; ++v) {
    wall[v] = detail::rate_wall(p, p.edges[edge_of[v]]);
    cons.push_back(detail::Constraint::lower_bound(v));
    cons.push_back(detail::Constraint::upper_bound(v, wall[v]));
  }
  for (size_t i = 0; i < p.f.size(); ++i) {
    std::vector<int> vars;
    for (int v = 0; v < n; ++v)
      if (p.edges[edge_of[v]].left == static_cast<int>(i)) vars.push_back(v);
    if (vars.empty()) continue;
    if (std::isfinite(p.f[i]))
      cons.push_back(detail::Constraint::linear(vars, std::vector<double>(vars.size(), 1.0), p.f[i]));
    if (p.powers[i].is_finite())
      cons.push_back(detail::Constraint::power_sum(vars, p.powers[i].watts));
  }
  for (size_t j = 0; j < p.g.size(); ++j) {
    if (!std::isfinite(p.g[j])) continue;
    std::vector<int> vars;
    for (int v = 0; v < n; ++v)
      if (p.edges[edge_of[v]].right == static_cast<int>(j)) vars.push_back(v);
    if (!vars.empty())
      cons.push_back(detail::Constraint::linear(vars, std::vector<double>(vars.size(), 1.0), p.g[j]));
  }

  // Strictly feasible start: a uniform tiny rate, shrunk until interior.
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1e-3);
  for (int h = 0; h < 80 && !detail::strictly_feasible(x, cons); ++h) x *= 0.5;
  if (!detail::strictly_feasible(x, cons)) return detail::zero_solution(p);

  auto res = detail::barrier_maximize(Eigen::VectorXd::Ones(n), cons, x, epsilon);

  LayerSolution s = detail::zero_solution(p);
  for (int v = 0; v < n; ++v) {
    double r = std::max(0.0, res.x[v]);
    s.rates[edge_of[v]] = r;
    s.edge_powers[edge_of[v]] = RateFunction::invert(r);
  }
  detail::fill_totals(p, s);
  s.iterations = res.iterations;
  s.converged = res.converged;
  s.feasibility_slack = detail::layer_slack(p, s);
  return s;
}

// Layer solve with Gaussian MAC subset constraints on each right node's
// incoming edges. Joint primal variables (rate, power) per edge; subset
// constraints are added lazily (singletons and the full set are seeded).
inline LayerSolution mac_layer_opt(const LayerProblem& p, double epsilon = kDefaultEpsilon) {
  detail::check_layer_problem(p);
  if (!p.mac_mode) return layer_opt(p, epsilon);

  std::vector<int> var_of(p.edges.size(), -1);
  std::vector<int> edge_of;
  for (size_t e = 0; e < p.edges.size(); ++e) {
    const auto& ed = p.edges[e];
    bool dead = p.f[ed.left] <= 0.0 || p.g[ed.right] <= 0.0 ||
                (p.powers[ed.left].is_finite() && p.powers[ed.left].watts <= 0.0);
    if (!dead) {
      var_of[e] = static_cast<int>(edge_of.size());
      edge_of.push_back(static_cast<int>(e));
    }
  }
  const int n = static_cast<int>(edge_of.size());
  if (n == 0) return detail::zero_solution(p);
  // Variables: [0, n) edge rates, [n, 2n) edge powers.
  auto rate_var = [](int v) { return v; };
  auto power_var = [n](int v) { return n + v; };

  std::vector<detail::Constraint> cons;
  for (int v = 0; v < n; ++v) {
    const auto& ed = p.edges[edge_of[v]];
    double rwall = detail::rate_wall(p, ed);
    double pwall = p.powers[ed.left].is_finite() ? p.powers[ed.left].watts + 1.0
                                                 : RateFunction::invert(rwall) + 1.0;
    cons.push_back(detail::Constraint::lower_bound(rate_var(v)));
    cons.push_back(detail::Constraint::upper_bound(rate_var(v), rwall));
    cons.push_back(detail::Constraint::lower_bound(power_var(v)));
    cons.push_back(detail::Constraint::upper_bound(power_var(v), pwall));
  }
  for (size_t i = 0; i < p.f.size(); ++i) {
    std::vector<int> rvars, pvars;
    for (int v = 0; v < n; ++v)
      if (p.edges[edge_of[v]].left == static_cast<int>(i)) {
        rvars.push_back(rate_var(v));
        pvars.push_back(power_var(v));
      }
    if (rvars.empty()) continue;
    if (std::isfinite(p.f[i]))
      cons.push_back(detail::Constraint::linear(rvars, std::vector<double>(rvars.size(), 1.0), p.f[i]));
    if (p.powers[i].is_finite())
      cons.push_back(detail::Constraint::linear(pvars, std::vector<double>(pvars.size(), 1.0),
                                                p.powers[i].watts));
  }
  // Per-right-node incoming variables, g caps, and seeded MAC subsets.
  std::vector<std::vector<int>> recv(p.g.size());
  for (int v = 0; v < n; ++v) recv[p.edges[edge_of[v]].right].push_back(v);
  std::set<std::pair<int, unsigned long>> added;  // (right node, subset mask)
  auto add_subset = [&](int j, unsigned long mask) {
    if (!added.insert({j, mask}).second) return;
    std::vector<int> rvars, pvars;
    for (size_t a = 0; a < recv[j].size(); ++a)
      if (mask & (1ul << a)) {
        rvars.push_back(rate_var(recv[j][a]));
        pvars.push_back(power_var(recv[j][a]));
      }
    cons.push_back(detail::Constraint::mac_cap(rvars, pvars));
  };
  for (size_t j = 0; j < p.g.size(); ++j) {
    if (recv[j].empty()) continue;
    if (recv[j].size() > 20) throw TooLarge("mac receiver with in-degree > 20");
    if (std::isfinite(p.g[j])) {
      std::vector<int> rvars;
      for (int v : recv[j]) rvars.push_back(rate_var(v));
      cons.push_back(detail::Constraint::linear(rvars, std::vector<double>(rvars.size(), 1.0), p.g[j]));
    }
    for (size_t a = 0; a < recv[j].size(); ++a) add_subset(static_cast<int>(j), 1ul << a);
    if (recv[j].size() > 1)
      add_subset(static_cast<int>(j), (1ul << recv[j].size()) - 1);
  }

  // Strictly feasible start: small positive powers, tiny rates.
  Eigen::VectorXd x(2 * n);
  for (int v = 0; v < n; ++v) {
    const auto& ed = p.edges[edge_of[v]];
    int deg = 0;
    for (int w = 0; w < n; ++w)
      if (p.edges[edge_of[w]].left == ed.left) ++deg;
    x[power_var(v)] = p.powers[ed.left].is_finite() ? p.powers[ed.left].watts / (2.0 * deg) : 1.0;
    x[rate_var(v)] = 1e-4;
  }
  for (int h = 0; h < 80 && !detail::strictly_feasible(x, cons); ++h)
    for (int v = 0; v < n; ++v) x[rate_var(v)] *= 0.5;
  if (!detail::strictly_feasible(x, cons)) return detail::zero_solution(p);

  detail::BarrierResult res;
  long total_iters = 0;
  bool converged = true;
  for (int round = 0; round < 40; ++round) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * n);
    for (int v = 0; v < n; ++v) c[rate_var(v)] = 1.0;
    res = detail::barrier_maximize(c, cons, x, epsilon);
    total_iters += res.iterations;
    converged = converged && res.converged;
    // Look for the most violated unseeded subset at each receiver.
    bool violated = false;
    for (size_t j = 0; j < p.g.size(); ++j) {
      const auto& rv = recv[j];
      if (rv.size() < 3) continue;  // all subsets already seeded for <=2 users
      unsigned long full = (1ul << rv.size()) - 1;
      double worst = 1e-9;
      unsigned long worst_mask = 0;
      for (unsigned long mask = 1; mask <= full; ++mask) {
        if (added.count({static_cast<int>(j), mask})) continue;
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
      if (worst_mask) {
        add_subset(static_cast<int>(j), worst_mask);
        violated = true;
      }
    }
    if (!violated) break;
    // Re-center from a slightly shrunk copy of the current iterate so the new
    // constraint is strictly satisfied.
    x = res.x;
    for (int h = 0; h < 80 && !detail::strictly_feasible(x, cons); ++h)
      for (int v = 0; v < n; ++v) x[rate_var(v)] *= 0.5;
    if (!detail::strictly_feasible(x, cons)) break;
  }

  LayerSolution s = detail::zero_solution(p);
  for (int v = 0; v < n; ++v) {
    s.rates[edge_of[v]] = std::max(0.0, res.x[rate_var(v)]);
    s.edge_powers[edge_of[v]] = std::max(0.0, res.x[power_var(v)]);
  }
  detail::fill_totals(p, s);
  s.iterations = total_iters;
  s.converged = converged;
  s.feasibility_slack = detail::layer_slack(p, s);
  return s;
}

// Capacity of an explicit edge cut: each cut edge (u,v) is charged at node u's
// full budget, log2(1 + P_u). Throws NotACut if removing the edges leaves a
// source -> destination path, UnknownNode if an edge does not exist.
inline double cut_capacity(const LayeredNetwork& net,
                           const std::vector<std::pair<std::string, std::string>>& cut) {
  std::set<int> removed;
  for (const auto& [a, b] : cut) {
    int u = net.index_of(a), v = net.index_of(b);
    if (u < 0) throw UnknownNode("cut endpoint '" + a + "'");
    if (v < 0) throw UnknownNode("cut endpoint '" + b + "'");
    int e = net.find_edge(u, v);
    if (e < 0) throw UnknownNode("cut edge " + a + " -> " + b + " is not a network edge");
    removed.insert(e);
  }
  // Check the edge set separates source from destination.
  std::vector<bool> seen(net.node_count(), false);
  std::vector<int> stack{net.source};
  seen[net.source] = true;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int e : net.out_edges[u]) {
      if (removed.count(e)) continue;
      int v = net.edges[e].to;
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  if (seen[net.destination]) throw NotACut("source still reaches destination");
  double cap = 0.0;
  for (int e : removed) {
    const Power& pu = net.powers[net.edges[e].from];
    if (!pu.is_finite()) return kUnbounded;
    cap += RateFunction::evaluate(pu.watts);
  }
  return cap;
}

}  // namespace ehflow
