#pragma once

// Online transmission scheduling under energy harvesting: accumulate-energy
// bookkeeping, the R*(t', dt', s) evaluator (max-flow with budgets A_k(s)/dt'),
// the lazy doubling/line-search online policy, the offline lower bound, and
// competitive-ratio measurement.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ehflow/errors.hpp"
#include "ehflow/flowmax.hpp"
#include "ehflow/network.hpp"
#include "ehflow/rate.hpp"

namespace ehflow {

struct ArrivalEvent {
  double t = 0.0;
  std::string node;
  double energy = 0.0;
};

struct ArrivalSequence {
  std::vector<ArrivalEvent> events;  // kept sorted lexicographically by (t, node)

  void normalize() {
    std::sort(events.begin(), events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
      return a.t != b.t ? a.t < b.t : a.node < b.node;
    });
  }
};

// Validates an arrival sequence against a network: node ids must exist,
// energies must be positive, times nonnegative. Returns the normalized copy.
inline ArrivalSequence validate_arrivals(const DagNetwork& net, ArrivalSequence seq) {
  for (const auto& ev : seq.events) {
    if (net.index_of(ev.node) < 0) throw UnknownNode("arrival at '" + ev.node + "'");
    if (!(ev.energy > 0.0)) throw ParseError("arrival energies must be positive");
    if (ev.t < 0.0) throw ParseError("arrival times must be nonnegative");
  }
  seq.normalize();
  return seq;
}

// Total energy harvested by node k up to and including time t.
inline double accumulate(const ArrivalSequence& arrivals, const std::string& k, double t) {
  double sum = 0.0;
  for (const auto& ev : arrivals.events) {
    if (ev.t > t) break;
    if (ev.node == k) sum += ev.energy;
  }
  return sum;
}

// Overload that also checks the node exists in the network.
inline double accumulate(const DagNetwork& net, const ArrivalSequence& arrivals,
                         const std::string& k, double t) {
  if (net.index_of(k) < 0) throw UnknownNode("accumulate('" + k + "')");
  return accumulate(arrivals, k, t);
}

namespace detail {

// Cached layered structure with substitutable node powers.
struct ScheduleContext {
  const DagNetwork* dag = nullptr;
  LayeredNetwork layered;
  double epsilon = kDefaultEpsilon;

  explicit ScheduleContext(const DagNetwork& d, double eps = kDefaultEpsilon)
      : dag(&d), layered(dag_to_layered(d)), epsilon(eps) {}

  // Max flow with node budgets A_k(s)/delta_t; returns the full solution.
  FlowSolution solve(const ArrivalSequence& arrivals, double delta_t, double s) const {
    LayeredNetwork net = layered;
    for (int i = 0; i < net.node_count(); ++i) {
      if (net.is_dummy(i)) continue;
      double a = accumulate(arrivals, net.ids[i], s);
      net.powers[i] = Power::finite(a / delta_t);
    }
    // The destination never transmits; keep it unconstrained for clarity.
    net.powers[net.destination] = Power::infinite();
    FlowOptions opts;
    opts.epsilon = epsilon;
    return flowmax_multilayer(net, opts);
  }
};

}  // namespace detail

// R*(t', delta_t, s): optimal flow when every node k spreads the energy it has
// harvested by time s evenly over a window of length delta_t.
inline double r_star(const DagNetwork& net, const ArrivalSequence& arrivals, double t_prime,
                     double delta_t, double s, double epsilon = kDefaultEpsilon) {
  if (!(delta_t > 0.0)) throw Error("r_star: delta_t must be positive");
  if (s > t_prime + 1e-12) throw Error("r_star: s must not exceed t_prime");
  detail::ScheduleContext ctx(net, epsilon);
  return ctx.solve(arrivals, delta_t, s).flow;
}

struct CounterCheck {
  double c = 0.0;      // counter value
  double value = 0.0;  // trigger quantity 2c * R*(c, 2c, c)
};

struct LazySchedule {
  double t_min = 0.0;
  double completion = 0.0;  // = 2 * t_min
  double rate = 0.0;        // flow of the returned static allocation
  double c_star = 0.0;      // counter value at trigger
  std::vector<std::pair<std::string, double>> allocation;  // ("u->v", watts) per active edge
  std::vector<CounterCheck> counter_history;
  double delta = 0.0;
};

struct LazyConfig {
  double horizon_factor = 1048576.0;  // horizon = factor * first arrival instant
  // When true, the t_min line search freezes the energy state at the trigger
  // counter (A_k(c)); when false (default) it uses the energy actually
  // harvested by the candidate start time (A_k(t')), which is what makes the
  // factor-2 completion bound hold against the offline lower bound.
  bool energy_at_trigger = false;
  double epsilon = kDefaultEpsilon;
};

// The lazy online policy: wait while doubling a time counter (or jumping to
// the next arrival), trigger once transmitting the currently harvested energy
// over [c, 2c] could deliver the payload, then line-search the earliest start
// t_min in [c, 2c] and transmit statically over [t_min, 2 t_min].
inline LazySchedule lazy_online(const DagNetwork& net, const ArrivalSequence& arrivals, double B_o,
                                double delta, LazyConfig cfg = {}) {
  if (!(delta > 0.0)) throw Error("lazy_online: delta must be positive");
  LazySchedule sched;
  sched.delta = delta;
  if (B_o <= 0.0) return sched;  // nothing to send
  if (arrivals.events.empty()) throw HorizonExceeded("no energy ever arrives");

  detail::ScheduleContext ctx(net, cfg.epsilon);
  double c = arrivals.events.front().t;
  if (!(c > 0.0)) c = std::max(c, delta);  // a zero-time arrival: start the counter one step in
  const double horizon = cfg.horizon_factor * c;

  while (true) {
    double trigger = 2.0 * c * ctx.solve(arrivals, 2.0 * c, c).flow;
    sched.counter_history.push_back({c, trigger});
    if (trigger >= B_o) break;
    double next = 2.0 * c;
    for (const auto& ev : arrivals.events)
      if (ev.t > c) {
        next = std::min(next, ev.t);
        break;
      }
    if (next > horizon) throw HorizonExceeded("payload unattainable with the supplied arrivals");
    c = next;
  }
  sched.c_star = c;

  // Earliest t' in [c, 2c] with t' * R*(t') >= B_o (monotone in t'), found by
  // bisection to accuracy delta.
  auto deliverable = [&](double t) {
    double s = cfg.energy_at_trigger ? c : t;
    return t * ctx.solve(arrivals, t, s).flow;
  };
  double lo = c, hi = 2.0 * c;
  if (deliverable(lo) >= B_o) {
    hi = lo;
  } else {
    while (hi - lo > delta) {
      double mid = 0.5 * (lo + hi);
      (deliverable(mid) >= B_o ? hi : lo) = mid;
    }
  }
  sched.t_min = hi;
  sched.completion = 2.0 * hi;

  double s_energy = cfg.energy_at_trigger ? c : sched.t_min;
  FlowSolution fs = ctx.solve(arrivals, sched.t_min, s_energy);
  sched.rate = fs.flow;
  const LayeredNetwork& lay = ctx.layered;
  for (int e = 0; e < lay.edge_count(); ++e)
    if (fs.powers[e] > 0.0)
      sched.allocation.push_back(
          {lay.ids[lay.edges[e].from] + "->" + lay.ids[lay.edges[e].to], fs.powers[e]});
  return sched;
}

// Lemma-style offline lower bound: the smallest t such that spreading all
// energy harvested by t over a window of length t delivers the payload. Any
// offline schedule needs at least this long.
inline double offline_lower_bound(const DagNetwork& net, const ArrivalSequence& arrivals,
                                  double B_o, double delta, LazyConfig cfg = {}) {
  if (!(delta > 0.0)) throw Error("offline_lower_bound: delta must be positive");
  if (B_o <= 0.0) return arrivals.events.empty() ? 0.0 : arrivals.events.front().t;
  if (arrivals.events.empty()) throw HorizonExceeded("no energy ever arrives");
  detail::ScheduleContext ctx(net, cfg.epsilon);
  auto value = [&](double t) { return t * ctx.solve(arrivals, t, t).flow; };

  double first = std::max(arrivals.events.front().t, delta);
  const double horizon = cfg.horizon_factor * first;
  // Segment boundaries: arrival instants (energy state is constant between
  // them, and t * R is continuous increasing there).
  std::vector<double> marks;
  for (const auto& ev : arrivals.events)
    if (ev.t >= first && (marks.empty() || ev.t > marks.back())) marks.push_back(ev.t);
  if (marks.empty() || marks.front() > first) marks.insert(marks.begin(), first);

  double lo = -1.0, hi = -1.0;
  for (size_t i = 0; i < marks.size(); ++i) {
    double a = marks[i];
    if (value(a) >= B_o) {
      if (i == 0) return a;  // cannot start earlier than the first arrival
      lo = marks[i - 1];
      hi = a;
      break;
    }
    if (i + 1 == marks.size()) {
      // Beyond the last arrival: grow until the payload fits.
      double b = std::max(2.0 * a, a + delta);
      while (value(b) < B_o) {
        b *= 2.0;
        if (b > horizon) throw HorizonExceeded("payload unattainable with the supplied arrivals");
      }
      lo = a;
      hi = b;
    }
  }
  while (hi - lo > delta) {
    double mid = 0.5 * (lo + hi);
    (value(mid) >= B_o ? hi : lo) = mid;
  }
  return hi;
}

// Ratio of the lazy policy's completion time to the offline lower bound (an
// upper bound on the true competitive ratio for this arrival sequence).
inline double competitive_ratio_estimate(const DagNetwork& net, const ArrivalSequence& arrivals,
                                         double B_o, double delta, LazyConfig cfg = {}) {
  double t_lazy = lazy_online(net, arrivals, B_o, delta, cfg).completion;
  double t_lb = offline_lower_bound(net, arrivals, B_o, delta, cfg);
  if (!(t_lb > 0.0)) throw Error("competitive ratio undefined for a zero lower bound");
  return t_lazy / t_lb;
}

}  // namespace ehflow
