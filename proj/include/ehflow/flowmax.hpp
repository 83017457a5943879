#pragma once

// Whole-network max-flow orchestration: the two-layer algorithm (equal source
// split + redistribution), the multi-layer algorithm (forward layer sweeps
// with power reallocation away from saturated nodes), and the max-flow vs
// min-cut demonstration.

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ehflow/errors.hpp"
#include "ehflow/layer_solver.hpp"
#include "ehflow/network.hpp"
#include "ehflow/oracle.hpp"
#include "ehflow/rate.hpp"

namespace ehflow {

struct FlowOptions {
  double epsilon = kDefaultEpsilon;
  bool mac = false;
  int max_outer = kMaxOuterIterations;
};

struct TraceEntry {
  int c = 0;              // outer iteration counter
  int pair = 0;           // which layer pair was solved (1 = source pair)
  double R = 0.0;         // sum rate of that pair at this iteration
  std::vector<int> U;     // saturated left nodes (network node indices)
};

struct FlowSolution {
  double flow = 0.0;
  std::vector<double> rates;        // per edge of the layered network
  std::vector<double> powers;       // per edge transmit powers
  std::vector<double> pair_rates;   // latest sum rate per pair (index k-1)
  std::vector<TraceEntry> trace;
  std::vector<double> bottleneck_trace;  // min_k pair rate, recorded at each reallocation
  int iterations = 0;               // number of layer-pair solves
  bool converged = true;
  std::string method = "flowmax";
  double feasibility_slack = 0.0;
};

namespace detail {

inline double saturation_tol(double epsilon) { return std::max(1e-9, 50.0 * epsilon); }

// Max violation of node budgets and flow conservation for an assembled solution.
inline double flow_slack(const LayeredNetwork& net, const FlowSolution& s) {
  double worst = 0.0;
  for (int u = 0; u < net.node_count(); ++u) {
    if (net.powers[u].is_finite()) {
      double used = 0.0;
      for (int e : net.out_edges[u]) used += s.powers[e];
      worst = std::max(worst, used - net.powers[u].watts);
    }
    if (u != net.source && u != net.destination) {
      double in = 0.0, out = 0.0;
      for (int e : net.in_edges[u]) in += s.rates[e];
      for (int e : net.out_edges[u]) out += s.rates[e];
      worst = std::max(worst, out - in);
    }
  }
  return std::max(0.0, worst);
}

}  // namespace detail

// Reallocates pair-(k-1) edge powers away from the saturated set U in layer
// k-1, spreading the freed power over edges toward the unsaturated nodes while
// keeping every predecessor's total outgoing power constant and every v in the
// original U strictly above its rate (f_v > r_v). `node_out_rate[v]` is v's
// current outgoing sum rate; `powers` is the full per-edge power vector, of
// which only pair-(k-1) entries are touched.
inline std::vector<double> power_aug(const LayeredNetwork& net, int k, const std::vector<int>& U,
                                     const std::vector<double>& node_out_rate,
                                     std::vector<double> powers) {
  if (k < 2 || k > net.K() + 1) throw Error("power_aug: pair index out of range");
  if (!is_layer_connected(net, k - 1))
    throw NotLayerConnected("pair " + std::to_string(k - 1));
  const auto& left_layer = net.layers[k - 1];
  std::set<int> inU(U.begin(), U.end());
  for (int v : U)
    if (net.layer_of[v] != k - 1) throw Error("power_aug: U node outside layer k-1");
  if (inU.empty() || inU.size() >= left_layer.size())
    throw Error("power_aug: U must be a proper nonempty subset of layer k-1");

  // Predecessors in ascending id order for deterministic picks.
  std::vector<int> preds = net.layers[k - 2];
  std::sort(preds.begin(), preds.end(),
            [&](int a, int b) { return net.ids[a] < net.ids[b]; });

  while (true) {
    int u = -1, v = -1, euv = -1;
    for (int cand : preds) {
      bool touches_comp = false;
      int best_v = -1, best_e = -1;
      for (int e : net.out_edges[cand]) {
        int head = net.edges[e].to;
        if (inU.count(head)) {
          if (std::isfinite(powers[e]) &&
              (best_v < 0 || net.ids[head] < net.ids[best_v])) {
            best_v = head;
            best_e = e;
          }
        } else {
          touches_comp = true;
        }
      }
      if (best_v >= 0 && touches_comp) {
        u = cand;
        v = best_v;
        euv = best_e;
        break;
      }
    }
    if (u < 0) break;

    double f_minus = 0.0;
    for (int e : net.in_edges[v])
      if (e != euv) f_minus += RateFunction::evaluate(powers[e]);
    const double r_v = node_out_rate[v];
    std::vector<int> comp_edges;
    for (int e : net.out_edges[u])
      if (!inU.count(net.edges[e].to)) comp_edges.push_back(e);
    const double d_u = static_cast<double>(comp_edges.size());

    if (f_minus > r_v) {
      double moved = powers[euv] / 2.0;
      powers[euv] -= moved;
      for (int e : comp_edges) powers[e] += moved / d_u;
    } else {
      double p_tilde = RateFunction::invert(std::max(0.0, r_v - f_minus));
      p_tilde = std::min(p_tilde, powers[euv]);
      double share = (powers[euv] - p_tilde) / (1.0 + d_u);
      powers[euv] = p_tilde + share;
      for (int e : comp_edges) powers[e] += share;
    }
    for (int e : comp_edges) inU.insert(net.edges[e].to);
  }
  return powers;
}

// Two-layer algorithm: equal source split, inner layer solve, redistribution of
// the saturated nodes' unused source power until the saturated set collapses
// or the objective stalls.
inline FlowSolution flowmax_two_layer(const LayeredNetwork& net, FlowOptions opts = {}) {
  if (net.K() != 2) throw Error("flowmax_two_layer requires exactly two intermediate layers");
  if (!net.powers[net.source].is_finite())
    throw Error("flowmax_two_layer requires a finite source budget");
  const auto& L1 = net.layers[1];
  const auto& L2 = net.layers[2];
  const int n1 = static_cast<int>(L1.size());
  const double u_tol = detail::saturation_tol(opts.epsilon);

  // Source edge per L1 node (layered structure guarantees exactly one).
  std::vector<int> src_edge(n1, -1);
  for (int a = 0; a < n1; ++a) src_edge[a] = net.in_edges[L1[a]][0];

  // Inner problem skeleton: left = L1, right = L2.
  LayerProblem prob;
  prob.mac_mode = opts.mac;
  prob.f.assign(n1, 0.0);
  prob.powers.resize(n1);
  std::vector<int> lpos(net.node_count(), -1), rpos(net.node_count(), -1);
  for (int a = 0; a < n1; ++a) {
    lpos[L1[a]] = a;
    prob.powers[a] = net.powers[L1[a]];
  }
  prob.g.resize(L2.size());
  for (size_t b = 0; b < L2.size(); ++b) {
    rpos[L2[b]] = static_cast<int>(b);
    const Power& pj = net.powers[L2[b]];
    prob.g[b] = pj.is_finite() ? RateFunction::evaluate(pj.watts) : kUnbounded;
  }
  std::vector<int> inner_edges;
  for (int j : L2)
    for (int e : net.in_edges[j]) {
      prob.edges.push_back({lpos[net.edges[e].from], rpos[j]});
      inner_edges.push_back(e);
    }

  std::vector<double> split(n1, net.powers[net.source].watts / n1);
  FlowSolution out;
  LayerSolution sol;
  double prevR = 0.0;
  int c = 0;
  bool converged = true;
  while (true) {
    ++c;
    for (int a = 0; a < n1; ++a) prob.f[a] = RateFunction::evaluate(split[a]);
    sol = opts.mac ? mac_layer_opt(prob, opts.epsilon) : layer_opt(prob, opts.epsilon);
    converged = converged && sol.converged;
    std::vector<int> U;
    for (int a = 0; a < n1; ++a)
      if (sol.left_rate[a] < prob.f[a] - u_tol) U.push_back(L1[a]);
    out.trace.push_back({c, 2, sol.objective, U});
    if (U.empty() || static_cast<int>(U.size()) == n1) break;
    if (c >= 2 && std::abs(sol.objective - prevR) <= opts.epsilon) break;
    if (c >= opts.max_outer) {
      converged = false;
      break;
    }
    prevR = sol.objective;
    // Collect unused source power at saturated nodes, then spread it equally
    // over all splits (saturated nodes keep exactly what their rate needs plus
    // their share, so f_i stays strictly above r_i).
    double delta = 0.0;
    for (int v : U) {
      int a = lpos[v];
      delta += split[a] - RateFunction::invert(sol.left_rate[a]);
    }
    const double share = delta / n1;
    for (int a = 0; a < n1; ++a) {
      if (std::find(U.begin(), U.end(), L1[a]) != U.end())
        split[a] = RateFunction::invert(sol.left_rate[a]) + share;
      else
        split[a] += share;
    }
  }

  out.flow = sol.objective;
  out.pair_rates = {sol.objective, sol.objective};
  out.bottleneck_trace = {sol.objective};
  out.iterations = c;
  out.converged = converged;
  out.rates.assign(net.edge_count(), 0.0);
  out.powers.assign(net.edge_count(), 0.0);
  for (int a = 0; a < n1; ++a) {
    out.rates[src_edge[a]] = sol.left_rate[a];
    out.powers[src_edge[a]] = RateFunction::invert(sol.left_rate[a]);
  }
  for (size_t t = 0; t < inner_edges.size(); ++t) {
    out.rates[inner_edges[t]] = sol.rates[t];
    out.powers[inner_edges[t]] = sol.edge_powers[t];
  }
  for (size_t b = 0; b < L2.size(); ++b) {
    int e = net.out_edges[L2[b]][0];
    out.rates[e] = sol.right_rate[b];
    out.powers[e] = RateFunction::invert(sol.right_rate[b]);
  }
  out.feasibility_slack = std::max(sol.feasibility_slack, detail::flow_slack(net, out));
  return out;
}

// Multi-layer algorithm: forward sweep of layer-pair solves (pair 1 re-splits
// the source); on a bottleneck at pair k, reallocate pair k-1 powers away from
// the saturated set, re-solve pairs k-2..2 backward, and restart the sweep.
// Falls back to the direct whole-network solve when a layer pair is not
// layer-connected.
inline FlowSolution flowmax_multilayer(const LayeredNetwork& net, FlowOptions opts = {}) {
  const int K = net.K();
  FlowSolution out;
  out.rates.assign(net.edge_count(), 0.0);
  out.powers.assign(net.edge_count(), 0.0);

  bool connected = true;
  for (int k = 1; k <= K && connected; ++k) connected = is_layer_connected(net, k);
  if (!connected) {
    auto rep = direct_maxflow(net, opts.epsilon, opts.mac);
    out.flow = rep.flow;
    out.rates = rep.rates;
    out.powers = rep.powers;
    out.method = "direct";
    out.converged = rep.converged;
    out.pair_rates.assign(std::max(1, K), rep.flow);
    out.bottleneck_trace = {rep.flow};
    out.feasibility_slack = detail::flow_slack(net, out);
    return out;
  }

  const double u_tol = detail::saturation_tol(opts.epsilon);

  // Allocation powers: budget-preserving per-node splits, modified only by
  // power reallocation. Solution rates/powers per edge from the latest solve
  // of the pair owning that edge.
  std::vector<double> alloc(net.edge_count(), 0.0);
  for (int u = 0; u < net.node_count(); ++u) {
    if (net.out_edges[u].empty()) continue;
    double per = net.powers[u].is_finite()
                     ? net.powers[u].watts / static_cast<double>(net.out_edges[u].size())
                     : kUnbounded;
    for (int e : net.out_edges[u]) alloc[e] = per;
  }
  std::vector<double> rate(net.edge_count(), 0.0);
  std::vector<double> spower(net.edge_count(), 0.0);
  std::vector<double> pair_R(K + 1, 0.0);  // index k, 1..K
  std::vector<bool> pair_solved(K + 1, false);

  // Solves pair k in place; returns the saturated set and slack delta.
  struct PairOutcome {
    double R = 0.0;
    std::vector<int> U;
    double delta = 0.0;
    bool converged = true;
  };
  auto solve_pair = [&](int k) {
    const auto& left = net.layers[k - 1];
    const auto& right = net.layers[k];
    LayerProblem p;
    p.mac_mode = opts.mac;
    std::vector<int> lpos(net.node_count(), -1), rpos(net.node_count(), -1);
    p.f.resize(left.size());
    p.powers.resize(left.size());
    for (size_t a = 0; a < left.size(); ++a) {
      lpos[left[a]] = static_cast<int>(a);
      p.powers[a] = net.powers[left[a]];
      if (k == 1) {
        p.f[a] = kUnbounded;  // the source generates traffic
      } else {
        double delivered = 0.0;
        for (int e : net.in_edges[left[a]]) delivered += rate[e];
        p.f[a] = delivered;
      }
    }
    p.g.resize(right.size());
    for (size_t b = 0; b < right.size(); ++b) {
      rpos[right[b]] = static_cast<int>(b);
      double cap = 0.0;
      for (int e : net.out_edges[right[b]])
        cap += std::isfinite(alloc[e]) ? RateFunction::evaluate(alloc[e]) : kUnbounded;
      p.g[b] = cap;
    }
    std::vector<int> pe;
    for (int j : right)
      for (int e : net.in_edges[j]) {
        p.edges.push_back({lpos[net.edges[e].from], rpos[j]});
        pe.push_back(e);
      }
    LayerSolution sol = opts.mac ? mac_layer_opt(p, opts.epsilon) : layer_opt(p, opts.epsilon);
    for (size_t t = 0; t < pe.size(); ++t) {
      rate[pe[t]] = sol.rates[t];
      spower[pe[t]] = sol.edge_powers[t];
    }
    PairOutcome oc;
    oc.R = sol.objective;
    oc.converged = sol.converged;
    for (size_t a = 0; a < left.size(); ++a) {
      if (k == 1) continue;
      if (sol.left_rate[a] < p.f[a] - u_tol) oc.U.push_back(left[a]);
      oc.delta += std::max(0.0, p.f[a] - sol.left_rate[a]);
    }
    pair_R[k] = oc.R;
    pair_solved[k] = true;
    return oc;
  };

  auto bottleneck = [&]() {
    double m = kUnbounded;
    for (int k = 1; k <= K; ++k)
      if (pair_solved[k]) m = std::min(m, pair_R[k]);
    return std::isfinite(m) ? m : 0.0;
  };

  // Degenerate single-hop network: one pair from source to destination.
  if (K == 0) {
    LayerProblem p;
    p.mac_mode = false;
    p.f = {kUnbounded};
    p.powers = {net.powers[net.source]};
    p.g = {kUnbounded};
    for (size_t t = 0; t < net.out_edges[net.source].size(); ++t) p.edges.push_back({0, 0});
    LayerSolution sol = layer_opt(p, opts.epsilon);
    for (size_t t = 0; t < net.out_edges[net.source].size(); ++t) {
      out.rates[net.out_edges[net.source][t]] = sol.rates[t];
      out.powers[net.out_edges[net.source][t]] = sol.edge_powers[t];
    }
    out.flow = sol.objective;
    out.pair_rates = {sol.objective};
    out.bottleneck_trace = {sol.objective};
    out.trace.push_back({1, 1, sol.objective, {}});
    out.iterations = 1;
    out.converged = sol.converged;
    out.feasibility_slack = std::max(sol.feasibility_slack, detail::flow_slack(net, out));
    return out;
  }

  int k = 1;
  int c = 0;
  bool converged = true;
  std::vector<double> last_left_rate(net.node_count(), 0.0);
  while (true) {
    ++c;
    if (c > opts.max_outer) {
      converged = false;
      break;
    }
    PairOutcome oc = solve_pair(k);
    converged = converged && oc.converged;
    out.trace.push_back({c, k, oc.R, oc.U});
    const size_t left_size = net.layers[k - 1].size();
    bool pass = k <= 1 || oc.U.empty() || oc.U.size() == left_size || oc.delta <= opts.epsilon;
    if (pass) {
      if (k == K) break;
      ++k;
      continue;
    }
    // Bottleneck at pair k: reallocate pair k-1 powers, then re-solve the
    // intermediate pairs backward and restart the forward sweep.
    out.bottleneck_trace.push_back(bottleneck());
    for (int v = 0; v < net.node_count(); ++v) {
      last_left_rate[v] = 0.0;
      for (int e : net.out_edges[v])
        if (net.layer_of[v] == k - 1) last_left_rate[v] += rate[e];
    }
    alloc = power_aug(net, k, oc.U, last_left_rate, std::move(alloc));
    for (int l = k - 2; l >= 2; --l) {
      ++c;
      PairOutcome b = solve_pair(l);
      converged = converged && b.converged;
      out.trace.push_back({c, l, b.R, b.U});
    }
    k = 1;
  }
  out.bottleneck_trace.push_back(bottleneck());
  out.iterations = c;
  out.converged = converged;

  // Assemble a conservation-consistent solution: pair-K rates stand; walking
  // leftward, each node's incoming rates are scaled down to match its (already
  // trimmed) outgoing total.
  std::vector<double> fin(net.edge_count(), 0.0);
  for (int j : net.layers[K]) {
    double in = 0.0;
    for (int e : net.in_edges[j]) {
      fin[e] = rate[e];
      in += rate[e];
    }
    for (int e : net.out_edges[j]) fin[e] = in;  // single last-hop edge
  }
  for (int kk = K - 1; kk >= 1; --kk) {
    for (int j : net.layers[kk]) {
      double target = 0.0;
      for (int e : net.out_edges[j]) target += fin[e];
      double colsum = 0.0;
      for (int e : net.in_edges[j]) colsum += rate[e];
      double factor = colsum > 0.0 ? std::min(1.0, target / colsum) : 0.0;
      for (int e : net.in_edges[j]) fin[e] = rate[e] * factor;
    }
  }
  out.rates = fin;
  for (int e = 0; e < net.edge_count(); ++e) {
    bool last_hop = net.edges[e].to == net.destination;
    if (opts.mac && !last_hop && net.edges[e].from != net.source)
      out.powers[e] = spower[e];
    else
      out.powers[e] = RateFunction::invert(fin[e]);
  }
  out.flow = 0.0;
  for (int e : net.in_edges[net.destination]) out.flow += fin[e];
  out.pair_rates.assign(pair_R.begin() + 1, pair_R.end());
  out.feasibility_slack = detail::flow_slack(net, out);
  return out;
}

// Max-flow vs minimum cut capacity on a DAG: returns (max-flow, min over all
// vertex-partition cuts of the per-edge full-budget capacity). The gap
// demonstrates that this flow problem does not satisfy max-flow = min-cut.
inline std::pair<double, double> min_cut_gap_demo(const DagNetwork& dag) {
  LayeredNetwork net = dag_to_layered(dag);
  FlowSolution fs = flowmax_multilayer(net);

  const int n = dag.node_count();
  std::vector<int> mids;
  for (int i = 0; i < n; ++i)
    if (i != dag.source && i != dag.destination) mids.push_back(i);
  if (mids.size() > 20) throw TooLarge("min-cut enumeration over > 20 intermediate nodes");
  double best = kUnbounded;
  for (unsigned long mask = 0; mask < (1ul << mids.size()); ++mask) {
    std::vector<bool> in_s(n, false);
    in_s[dag.source] = true;
    for (size_t a = 0; a < mids.size(); ++a)
      if (mask & (1ul << a)) in_s[mids[a]] = true;
    double cap = 0.0;
    for (const auto& e : dag.edges) {
      if (in_s[e.from] && !in_s[e.to]) {
        if (!dag.powers[e.from].is_finite()) {
          cap = kUnbounded;
          break;
        }
        cap += RateFunction::evaluate(dag.powers[e.from].watts);
      }
    }
    best = std::min(best, cap);
  }
  return {fs.flow, best};
}

}  // namespace ehflow
