#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "ehflow/ehflow.hpp"
#include "test_util.hpp"

using namespace ehflow;

namespace {

bool non_decreasing(const std::vector<double>& v, double tol = 1e-7) {
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] - tol) return false;
  return true;
}

// R(c) within each pair's consecutive iteration run must be non-decreasing.
bool trace_monotone(const FlowSolution& s, double tol = 1e-7) {
  for (size_t i = 1; i < s.trace.size(); ++i)
    if (s.trace[i].pair == s.trace[i - 1].pair && s.trace[i].R < s.trace[i - 1].R - tol)
      return false;
  return true;
}

}  // namespace

TEST_CASE("two-layer solve on a chain hits the single-link bottleneck") {
  LayeredNetwork net = dag_to_layered(testutil::chain({3.0, 1.0, 7.0}));
  REQUIRE(net.K() == 2);
  FlowSolution s = flowmax_two_layer(net);
  REQUIRE(s.flow == Catch::Approx(1.0).margin(1e-4));
  REQUIRE(s.converged);
  REQUIRE(s.feasibility_slack <= 1e-6);
}

TEST_CASE("two-layer solve reproduces the published source-capped plateaus") {
  SECTION("P_s=15, P_5=9.5") {
    FlowSolution s = flowmax_two_layer(dag_to_layered(testutil::relay_mesh(15.0, 9.5)));
    REQUIRE(s.flow == Catch::Approx(6.17493).margin(5e-3));
  }
  SECTION("P_s=10 plateau is flat in P_5") {
    for (double p5 : {0.3125, 2.0, 9.5}) {
      FlowSolution s = flowmax_two_layer(dag_to_layered(testutil::relay_mesh(10.0, p5)));
      REQUIRE(s.flow == Catch::Approx(5.16992).margin(5e-3));
    }
  }
  SECTION("P_s=12.5 plateau") {
    FlowSolution s = flowmax_two_layer(dag_to_layered(testutil::relay_mesh(12.5, 9.5)));
    REQUIRE(s.flow == Catch::Approx(5.71596).margin(5e-3));
  }
}

TEST_CASE("source-cap identity: when the source binds, R = 2 log2(1 + P_s/2)") {
  for (double ps : {10.0, 12.5, 15.0}) {
    FlowSolution s = flowmax_two_layer(dag_to_layered(testutil::relay_mesh(ps, 9.5)));
    bool first_iter_unsaturated = !s.trace.empty() && s.trace.front().U.empty();
    if (first_iter_unsaturated)
      REQUIRE(s.flow ==
              Catch::Approx(2.0 * std::log2(1.0 + ps / 2.0)).margin(1e-5));
  }
}

TEST_CASE("multilayer solve agrees with the two-layer solve on K=2 instances") {
  std::mt19937 rng(23);
  int checked = 0;
  for (int trial = 0; trial < 20 && checked < 5; ++trial) {
    DagNetwork dag = testutil::random_layered(rng, 2, 3);
    LayeredNetwork net = dag_to_layered(dag);
    if (net.K() != 2) continue;
    ++checked;
    double a = flowmax_two_layer(net).flow;
    double b = flowmax_multilayer(net).flow;
    REQUIRE(a == Catch::Approx(b).margin(1e-4));
  }
  REQUIRE(checked == 5);
  double a = flowmax_two_layer(dag_to_layered(testutil::relay_mesh(20.0, 9.5))).flow;
  double b = flowmax_multilayer(dag_to_layered(testutil::relay_mesh(20.0, 9.5))).flow;
  REQUIRE(a == Catch::Approx(b).margin(1e-4));
}

TEST_CASE("multilayer solve on a chain of unit-power nodes") {
  LayeredNetwork net = dag_to_layered(testutil::chain({1.0, 1.0, 1.0, 1.0}));
  FlowSolution s = flowmax_multilayer(net);
  REQUIRE(s.flow == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("multilayer solve matches the direct oracle on a dummy-bridged graph") {
  DagNetwork dag = make_dag({{"a", Power::finite(3)},
                             {"b", Power::finite(3)},
                             {"c", Power::finite(3)},
                             {"d", Power::finite(0)}},
                            {{"a", "b"}, {"b", "c"}, {"c", "d"}, {"a", "c"}, {"b", "d"}},
                            "a", "d");
  LayeredNetwork net = dag_to_layered(dag);
  FlowSolution s = flowmax_multilayer(net);
  OracleReport rep = direct_maxflow(net);
  REQUIRE(s.flow == Catch::Approx(rep.flow).margin(1e-3));
  REQUIRE(s.feasibility_slack <= 1e-6);
}

TEST_CASE("single-hop network solves in one pair") {
  DagNetwork dag = make_dag({{"s", Power::finite(3.0)}, {"d", Power::finite(0.0)}},
                            {{"s", "d"}}, "s", "d");
  FlowSolution s = flowmax_multilayer(dag_to_layered(dag));
  REQUIRE(s.flow == Catch::Approx(2.0).margin(1e-4));
}

TEST_CASE("non-layer-connected networks fall back to the direct solve") {
  DagNetwork dag = make_dag({{"s", Power::finite(4)},
                             {"a", Power::finite(1)},
                             {"b", Power::finite(1)},
                             {"c", Power::finite(1)},
                             {"e", Power::finite(1)},
                             {"d", Power::finite(0)}},
                            {{"s", "a"}, {"s", "b"}, {"a", "c"}, {"b", "e"},
                             {"c", "d"}, {"e", "d"}},
                            "s", "d");
  LayeredNetwork net = dag_to_layered(dag);
  FlowSolution s = flowmax_multilayer(net);
  REQUIRE(s.method == "direct");
  // Two independent chains, each capped by its unit-power relays.
  REQUIRE(s.flow == Catch::Approx(2.0).margin(2e-3));
}

TEST_CASE("power_aug conserves budgets and restores strict slack") {
  LayeredNetwork net = dag_to_layered(testutil::relay_mesh(20.0, 9.5));
  // Saturate n2 (pair 2's left layer is L1 = {n2, n3}).
  std::vector<int> U = {net.index_of("n2")};
  std::vector<double> out_rate(net.node_count(), 0.0);
  out_rate[net.index_of("n2")] = 1.0;
  out_rate[net.index_of("n3")] = 2.0;
  std::vector<double> powers(net.edge_count(), 0.0);
  int e_s2 = net.find_edge(net.index_of("s"), net.index_of("n2"));
  int e_s3 = net.find_edge(net.index_of("s"), net.index_of("n3"));
  powers[e_s2] = 10.0;
  powers[e_s3] = 10.0;

  std::vector<double> after = power_aug(net, 2, U, out_rate, powers);
  // Source budget conserved.
  REQUIRE(after[e_s2] + after[e_s3] == Catch::Approx(20.0).margin(1e-9));
  // The saturated node keeps strictly more than its rate needs...
  REQUIRE(RateFunction::evaluate(after[e_s2]) > 1.0);
  // ...and the freed power moved toward the unsaturated node.
  REQUIRE(after[e_s3] > 10.0);
  REQUIRE(after[e_s2] < 10.0);
}

TEST_CASE("power_aug rejects invalid saturated sets") {
  LayeredNetwork net = dag_to_layered(testutil::relay_mesh(20.0, 9.5));
  std::vector<double> out_rate(net.node_count(), 0.0);
  std::vector<double> powers(net.edge_count(), 1.0);
  SECTION("empty U") { REQUIRE_THROWS_AS(power_aug(net, 2, {}, out_rate, powers), Error); }
  SECTION("full-layer U") {
    REQUIRE_THROWS_AS(
        power_aug(net, 2, {net.index_of("n2"), net.index_of("n3")}, out_rate, powers), Error);
  }
  SECTION("pair index out of range") {
    REQUIRE_THROWS_AS(power_aug(net, 1, {net.index_of("n2")}, out_rate, powers), Error);
  }
}

TEST_CASE("power_aug on random instances keeps budgets and strict slack") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> frac(0.1, 0.6);
  int done = 0;
  for (int trial = 0; trial < 30 && done < 5; ++trial) {
    DagNetwork dag = testutil::random_layered(rng, 3, 3);
    LayeredNetwork net = dag_to_layered(dag);
    if (net.K() < 2) continue;
    const auto& L1 = net.layers[1];
    if (L1.size() < 2) continue;
    if (!is_layer_connected(net, 1)) continue;

    // Equal splits from the source; saturate the first L1 node at a fraction
    // of its incoming rate so the shrink branch has room to move power.
    std::vector<double> powers(net.edge_count(), 0.0);
    double per = net.powers[net.source].watts / net.out_edges[net.source].size();
    for (int e : net.out_edges[net.source]) powers[e] = per;
    std::vector<double> out_rate(net.node_count(), 0.0);
    int v = L1.front();
    double f_v = 0.0;
    for (int e : net.in_edges[v]) f_v += RateFunction::evaluate(powers[e]);
    out_rate[v] = frac(rng) * f_v;

    std::vector<double> after = power_aug(net, 2, {v}, out_rate, powers);
    ++done;
    double before_total = 0.0, after_total = 0.0;
    for (int e : net.out_edges[net.source]) {
      before_total += powers[e];
      after_total += after[e];
    }
    REQUIRE(after_total == Catch::Approx(before_total).margin(1e-9));
    double new_f = 0.0;
    for (int e : net.in_edges[v]) new_f += RateFunction::evaluate(after[e]);
    REQUIRE(new_f > out_rate[v]);
  }
  REQUIRE(done == 5);
}

TEST_CASE("iteration traces are monotone (within-pair R and bottleneck)") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    DagNetwork dag = testutil::random_layered(rng, 3, 3);
    FlowSolution s = flowmax_multilayer(dag_to_layered(dag));
    REQUIRE(trace_monotone(s));
    REQUIRE(non_decreasing(s.bottleneck_trace));
  }
  FlowSolution s = flowmax_two_layer(dag_to_layered(testutil::relay_mesh(20.0, 2.0)));
  REQUIRE(trace_monotone(s));
}

TEST_CASE("raising any node budget never lowers the flow") {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 4; ++trial) {
    DagNetwork dag = testutil::random_layered(rng, 3, 3);
    double base = flowmax_multilayer(dag_to_layered(dag)).flow;
    for (int u = 0; u < dag.node_count(); ++u) {
      if (!dag.powers[u].is_finite() || u == dag.destination) continue;
      DagNetwork bumped = dag;
      bumped.powers[u] = Power::finite(dag.powers[u].watts * 1.1);
      REQUIRE(flowmax_multilayer(dag_to_layered(bumped)).flow >= base - 1e-6);
    }
  }
}

TEST_CASE("max-flow falls strictly short of the min cut on the two-branch graph") {
  auto [flow, min_cut] = min_cut_gap_demo(testutil::two_branch(10.0, 0.1, 1000.0));
  // The optimum diverts just enough of a's power through c that b's link
  // saturates: R = log2(1 + P_b) + log2(1 + P_a - P_b).
  REQUIRE(flow == Catch::Approx(std::log2(1.1) + std::log2(10.9)).margin(2e-3));
  REQUIRE(min_cut > flow + 0.01);
}

TEST_CASE("two-branch graph with a dead branch routes everything the other way") {
  auto [flow, min_cut] = min_cut_gap_demo(testutil::two_branch(10.0, 0.0, 1000.0));
  REQUIRE(flow == Catch::Approx(std::log2(11.0)).margin(2e-3));
  REQUIRE(min_cut >= flow - 1e-9);
}

TEST_CASE("symmetric two-branch graph matches the grid oracle") {
  DagNetwork dag = testutil::two_branch(5.0, 5.0, 5.0);
  auto [flow, min_cut] = min_cut_gap_demo(dag);
  OracleReport grid = grid_maxflow(dag, 1e-3);
  REQUIRE(flow == Catch::Approx(grid.flow).margin(5e-3));
  REQUIRE(min_cut >= flow - 1e-9);
}
