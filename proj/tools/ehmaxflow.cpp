// Command-line front-end: single max-flow solves, parameter sweeps emitting
// CSV, and online-scheduling simulations.
//
// Exit codes: 0 success, 1 parse error, 2 solver non-convergence,
// 3 simulation horizon exceeded.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ehflow/ehflow.hpp"

namespace {

using namespace ehflow;

double resolve_epsilon(const std::optional<double>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("EHMAXFLOW_EPSILON")) {
    try {
      return std::stod(env);
    } catch (...) {
      throw ParseError("EHMAXFLOW_EPSILON is not a number");
    }
  }
  return kDefaultEpsilon;
}

struct SweepParam {
  std::string node;
  double lo = 0.0, hi = 0.0;
  int steps = 1;
  double at(int i) const {
    return steps <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
  }
};

SweepParam parse_param(const std::string& spec) {
  auto c2 = spec.rfind(':');
  auto c1 = spec.rfind(':', c2 == std::string::npos ? c2 : c2 - 1);
  if (c1 == std::string::npos || c2 == std::string::npos || c1 == c2)
    throw ParseError("--param expects node:lo-hi:steps, got '" + spec + "'");
  SweepParam p;
  p.node = spec.substr(0, c1);
  std::string range = spec.substr(c1 + 1, c2 - c1 - 1);
  auto dash = range.find('-', 1);
  try {
    if (dash == std::string::npos) {
      p.lo = p.hi = std::stod(range);
    } else {
      p.lo = std::stod(range.substr(0, dash));
      p.hi = std::stod(range.substr(dash + 1));
    }
    p.steps = std::stoi(spec.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ParseError("--param expects node:lo-hi:steps, got '" + spec + "'");
  }
  if (p.steps < 1) throw ParseError("--param steps must be >= 1");
  return p;
}

struct SolveRow {
  double flow = 0.0;
  long iterations = 0;
  double slack = 0.0;
  bool ok = false;
};

SolveRow solve_network(const DagNetwork& dag, double epsilon, bool mac, const std::string& method) {
  SolveRow row;
  LayeredNetwork lay = dag_to_layered(dag);
  if (method == "direct") {
    OracleReport rep = direct_maxflow(lay, epsilon, mac);
    row.flow = rep.flow;
    row.iterations = 1;
    FlowSolution tmp;
    tmp.rates = rep.rates;
    tmp.powers = rep.powers;
    row.slack = detail::flow_slack(lay, tmp);
    row.ok = rep.converged;
    return row;
  }
  FlowOptions opts;
  opts.epsilon = epsilon;
  opts.mac = mac;
  FlowSolution fs = lay.K() == 2 ? flowmax_two_layer(lay, opts) : flowmax_multilayer(lay, opts);
  row.flow = fs.flow;
  row.iterations = fs.iterations;
  row.slack = fs.feasibility_slack;
  row.ok = fs.converged;
  return row;
}

int cmd_maxflow(const std::string& file, const std::optional<double>& eps_flag, bool mac,
                const std::string& method, const std::string& csv_out) {
  double epsilon = resolve_epsilon(eps_flag);
  DagNetwork dag = load_network(file);
  LayeredNetwork lay = dag_to_layered(dag);

  std::ostringstream out;
  long iterations = 0;
  double slack = 0.0;
  std::vector<double> rates, powers;
  double flow = 0.0;
  bool converged = true;
  if (method == "direct") {
    OracleReport rep = direct_maxflow(lay, epsilon, mac);
    flow = rep.flow;
    rates = rep.rates;
    powers = rep.powers;
    iterations = 1;
    converged = rep.converged;
    FlowSolution tmp;
    tmp.rates = rates;
    tmp.powers = powers;
    slack = detail::flow_slack(lay, tmp);
  } else {
    FlowOptions opts;
    opts.epsilon = epsilon;
    opts.mac = mac;
    FlowSolution fs =
        lay.K() == 2 ? flowmax_two_layer(lay, opts) : flowmax_multilayer(lay, opts);
    flow = fs.flow;
    rates = fs.rates;
    powers = fs.powers;
    iterations = fs.iterations;
    slack = fs.feasibility_slack;
    converged = fs.converged;
  }
  out << "maxflow," << format_number(flow) << "\n";
  for (int e = 0; e < lay.edge_count(); ++e)
    out << "edge," << lay.ids[lay.edges[e].from] << "," << lay.ids[lay.edges[e].to] << ","
        << format_number(rates[e]) << "," << format_number(powers[e]) << "\n";
  out << "iterations," << iterations << "\n";
  out << "slack," << format_number(slack) << "\n";
  std::cout << out.str();
  if (!csv_out.empty()) {
    std::ofstream f(csv_out);
    f << "maxflow,iterations,slack\n"
      << format_number(flow) << "," << iterations << "," << format_number(slack) << "\n";
  }
  if (!converged) {
    std::cerr << "solver did not certify convergence\n";
    return 2;
  }
  return 0;
}

int cmd_sweep(const std::string& file, const std::vector<std::string>& param_specs,
              const std::optional<double>& eps_flag, bool mac, const std::string& method,
              int jobs, const std::string& csv_out) {
  double epsilon = resolve_epsilon(eps_flag);
  DagNetwork base = load_network(file);
  std::vector<SweepParam> params;
  for (const auto& s : param_specs) {
    params.push_back(parse_param(s));
    if (base.index_of(params.back().node) < 0)
      throw UnknownNode("--param node '" + params.back().node + "'");
  }
  if (params.empty()) throw ParseError("sweep requires at least one --param");

  long total = 1;
  for (const auto& p : params) total *= p.steps;

  std::vector<std::vector<double>> values(total, std::vector<double>(params.size()));
  for (long row = 0; row < total; ++row) {
    long rem = row;
    for (int pi = static_cast<int>(params.size()) - 1; pi >= 0; --pi) {
      values[row][pi] = params[pi].at(static_cast<int>(rem % params[pi].steps));
      rem /= params[pi].steps;
    }
  }

  std::vector<SolveRow> rows(total);
  std::atomic<long> next{0};
  auto worker = [&]() {
    while (true) {
      long row = next.fetch_add(1);
      if (row >= total) break;
      DagNetwork dag = base;
      for (size_t pi = 0; pi < params.size(); ++pi)
        dag.powers[dag.index_of(params[pi].node)] = Power::finite(values[row][pi]);
      try {
        rows[row] = solve_network(dag, epsilon, mac, method);
      } catch (const std::exception&) {
        rows[row].ok = false;
      }
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::ostringstream out;
  for (const auto& p : params) out << "P_" << p.node << ",";
  out << "maxflow,iterations,slack\n";
  for (long row = 0; row < total; ++row) {
    for (size_t pi = 0; pi < params.size(); ++pi) out << format_number(values[row][pi]) << ",";
    if (rows[row].ok)
      out << format_number(rows[row].flow) << "," << rows[row].iterations << ","
          << format_number(rows[row].slack) << "\n";
    else
      out << "NaN," << rows[row].iterations << ",NaN\n";
  }
  if (!csv_out.empty()) {
    std::ofstream f(csv_out);
    f << out.str();
  } else {
    std::cout << out.str();
  }
  return 0;
}

int cmd_simulate(const std::string& net_file, const std::string& arrivals_file, double bits,
                 double delta, const std::optional<double>& eps_flag, bool energy_at_trigger) {
  DagNetwork dag = load_network(net_file);
  ArrivalSequence arrivals = load_arrivals(arrivals_file, dag);
  LazyConfig cfg;
  cfg.epsilon = resolve_epsilon(eps_flag);
  cfg.energy_at_trigger = energy_at_trigger;

  LazySchedule sched = lazy_online(dag, arrivals, bits, delta, cfg);
  std::cout << "t_min," << format_number(sched.t_min) << "\n";
  std::cout << "completion," << format_number(sched.completion) << "\n";
  if (bits > 0.0) {
    double t_lb = offline_lower_bound(dag, arrivals, bits, delta, cfg);
    std::cout << "offline_lower_bound," << format_number(t_lb) << "\n";
    std::cout << "ratio," << format_number(t_lb > 0 ? sched.completion / t_lb : 0.0) << "\n";
  } else {
    std::cout << "offline_lower_bound,0\nratio,0\n";
  }
  for (const auto& ck : sched.counter_history)
    std::cout << "counter," << format_number(ck.c) << "," << format_number(ck.value) << "\n";
  for (const auto& [edge, p] : sched.allocation)
    std::cout << "power," << edge << "," << format_number(p) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-flow solver and online scheduler for layered wireless networks"};
  app.require_subcommand(1);

  std::optional<double> eps_flag;
  std::string net_file, arrivals_file, method = "flowmax", csv_out;
  std::vector<std::string> param_specs;
  bool mac = false, energy_at_trigger = false;
  int jobs = 1;
  double bits = 0.0, delta = 1e-3;

  auto* mf = app.add_subcommand("maxflow", "Solve a single max-flow instance");
  mf->add_option("network", net_file, "network JSON file")->required();
  mf->add_option("--epsilon", eps_flag, "convergence tolerance");
  mf->add_flag("--mac", mac, "multiple-access constraints at relay receivers");
  mf->add_option("--method", method, "flowmax|direct")
      ->check(CLI::IsMember({"flowmax", "direct"}));
  mf->add_option("-o,--csv", csv_out, "also write a one-row CSV");

  auto* sw = app.add_subcommand("sweep", "Cartesian parameter sweep, CSV output");
  sw->add_option("network", net_file, "network JSON file")->required();
  sw->add_option("--param", param_specs, "node:lo-hi:steps (repeatable)")->required();
  sw->add_option("--epsilon", eps_flag, "convergence tolerance");
  sw->add_flag("--mac", mac, "multiple-access constraints at relay receivers");
  sw->add_option("--method", method, "flowmax|direct")
      ->check(CLI::IsMember({"flowmax", "direct"}));
  sw->add_option("--jobs", jobs, "parallel workers");
  sw->add_option("-o,--csv", csv_out, "write CSV to file instead of stdout");

  auto* sim = app.add_subcommand("simulate", "Run the lazy online scheduler");
  sim->add_option("network", net_file, "network JSON file")->required();
  sim->add_option("arrivals", arrivals_file, "arrival sequence JSON file")->required();
  sim->add_option("--bits", bits, "payload size (rate units x seconds)")->required();
  sim->add_option("--delta", delta, "line-search accuracy (seconds)");
  sim->add_option("--epsilon", eps_flag, "convergence tolerance");
  sim->add_flag("--energy-at-trigger", energy_at_trigger,
                "freeze line-search energy at the trigger counter");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mf->parsed()) return cmd_maxflow(net_file, eps_flag, mac, method, csv_out);
    if (sw->parsed()) return cmd_sweep(net_file, param_specs, eps_flag, mac, method, jobs, csv_out);
    if (sim->parsed()) return cmd_simulate(net_file, arrivals_file, bits, delta, eps_flag,
                                           energy_at_trigger);
  } catch (const ehflow::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const ehflow::HorizonExceeded& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const ehflow::NonConvergence& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ehflow::MaxIterationsExceeded& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ehflow::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
