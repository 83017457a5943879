#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "ehflow/ehflow.hpp"
#include "test_util.hpp"

using namespace ehflow;

TEST_CASE("rate function closed forms and round trip") {
  REQUIRE(RateFunction::evaluate(0.0) == 0.0);
  REQUIRE(RateFunction::evaluate(1.0) == Catch::Approx(1.0));
  REQUIRE(RateFunction::evaluate(3.0) == Catch::Approx(2.0));
  for (double p : {0.01, 0.5, 2.0, 9.5, 30.0})
    REQUIRE(RateFunction::invert(RateFunction::evaluate(p)) ==
            Catch::Approx(p).epsilon(1e-12));
}

TEST_CASE("layer_opt single link uses the full budget") {
  LayerProblem p;
  p.f = {10.0};
  p.powers = {Power::finite(3.0)};
  p.g = {10.0};
  p.edges = {{0, 0}};
  LayerSolution s = layer_opt(p);
  REQUIRE(s.objective == Catch::Approx(2.0).margin(1e-4));
  REQUIRE(s.edge_powers[0] == Catch::Approx(3.0).margin(1e-3));
  REQUIRE(s.feasibility_slack <= kFeasTol);
}

TEST_CASE("layer_opt splits a budget evenly over symmetric edges") {
  LayerProblem p;
  p.f = {10.0};
  p.powers = {Power::finite(2.0)};
  p.g = {10.0, 10.0};
  p.edges = {{0, 0}, {0, 1}};
  LayerSolution s = layer_opt(p);
  REQUIRE(s.objective == Catch::Approx(2.0).margin(1e-4));
  REQUIRE(s.edge_powers[0] == Catch::Approx(1.0).margin(1e-3));
  REQUIRE(s.edge_powers[1] == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("layer_opt rates are primal: powers satisfy P = 2^r - 1 exactly") {
  LayerProblem p;
  p.f = {RateFunction::evaluate(11.0), RateFunction::evaluate(11.0)};
  p.powers = {Power::finite(5.0), Power::finite(6.0)};
  p.g = {RateFunction::evaluate(30.0), RateFunction::evaluate(9.5)};
  p.edges = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  LayerSolution s = layer_opt(p);
  for (size_t e = 0; e < p.edges.size(); ++e)
    REQUIRE(s.edge_powers[e] == RateFunction::invert(s.rates[e]));
  REQUIRE(s.feasibility_slack <= kFeasTol);
}

TEST_CASE("layer_opt matches the grid oracle on the reference inner problem") {
  // Inner subproblem of the four-relay mesh, f_i = log2(11) each, realized as a
  // network so the independent grid oracle can price it: dedicated feeders of
  // power 10 impose the f caps, single-out tails impose the g caps.
  DagNetwork dag = make_dag({{"s", Power::infinite()},
                             {"u2", Power::finite(10.0)},
                             {"u3", Power::finite(10.0)},
                             {"n2", Power::finite(5.0)},
                             {"n3", Power::finite(6.0)},
                             {"n4", Power::finite(30.0)},
                             {"n5", Power::finite(9.5)},
                             {"d", Power::finite(0.0)}},
                            {{"s", "u2"}, {"s", "u3"}, {"u2", "n2"}, {"u3", "n3"},
                             {"n2", "n4"}, {"n2", "n5"}, {"n3", "n4"}, {"n3", "n5"},
                             {"n4", "d"}, {"n5", "d"}},
                            "s", "d");
  OracleReport grid = grid_maxflow(dag, 1e-3);

  LayerProblem p;
  p.f = {RateFunction::evaluate(10.0), RateFunction::evaluate(10.0)};
  p.powers = {Power::finite(5.0), Power::finite(6.0)};
  p.g = {RateFunction::evaluate(30.0), RateFunction::evaluate(9.5)};
  p.edges = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  LayerSolution s = layer_opt(p);
  REQUIRE(s.objective == Catch::Approx(grid.flow).margin(5e-3));
}

TEST_CASE("mac_layer_opt degenerates to layer_opt with one user per receiver") {
  LayerProblem p;
  p.mac_mode = true;
  p.f = {RateFunction::evaluate(11.0), RateFunction::evaluate(11.0)};
  p.powers = {Power::finite(5.0), Power::finite(6.0)};
  p.g = {kUnbounded, kUnbounded};
  p.edges = {{0, 0}, {1, 1}};
  LayerSolution mac = mac_layer_opt(p);
  p.mac_mode = false;
  LayerSolution orth = layer_opt(p);
  REQUIRE(mac.objective == Catch::Approx(orth.objective).margin(1e-3));
}

TEST_CASE("mac_layer_opt: two unit-power users share one receiver at log2(3)") {
  LayerProblem p;
  p.mac_mode = true;
  p.f = {kUnbounded, kUnbounded};
  p.powers = {Power::finite(1.0), Power::finite(1.0)};
  p.g = {kUnbounded};
  p.edges = {{0, 0}, {1, 0}};
  LayerSolution s = mac_layer_opt(p);
  REQUIRE(s.objective == Catch::Approx(std::log2(3.0)).margin(2e-3));
  // The orthogonal model would report 2 log2(2) = 2; the sum constraint binds.
  REQUIRE(s.objective < 2.0 - 0.3);
  // Subset feasibility at the receiver.
  double rs = s.rates[0] + s.rates[1];
  double ps = s.edge_powers[0] + s.edge_powers[1];
  REQUIRE(rs <= RateFunction::evaluate(ps) + kFeasTol);
}

TEST_CASE("objective never decreases when constraints are relaxed") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> pw(0.5, 10.0), cap(0.5, 4.0);
  for (int trial = 0; trial < 8; ++trial) {
    LayerProblem p;
    p.f = {cap(rng), cap(rng)};
    p.powers = {Power::finite(pw(rng)), Power::finite(pw(rng))};
    p.g = {cap(rng), cap(rng)};
    p.edges = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    double base = layer_opt(p).objective;

    LayerProblem bigger_f = p;
    bigger_f.f[trial % 2] += 1.0;
    REQUIRE(layer_opt(bigger_f).objective >= base - 1e-5);

    LayerProblem bigger_g = p;
    bigger_g.g[trial % 2] += 1.0;
    REQUIRE(layer_opt(bigger_g).objective >= base - 1e-5);

    LayerProblem bigger_p = p;
    bigger_p.powers[trial % 2] = Power::finite(p.powers[trial % 2].watts * 1.5);
    REQUIRE(layer_opt(bigger_p).objective >= base - 1e-5);
  }
}

TEST_CASE("layer_opt rejects malformed problems") {
  LayerProblem p;
  p.f = {1.0};
  p.powers = {Power::finite(1.0)};
  p.g = {1.0};
  SECTION("left node without an edge") { REQUIRE_THROWS_AS(layer_opt(p), Error); }
  SECTION("negative f") {
    p.edges = {{0, 0}};
    p.f[0] = -1.0;
    REQUIRE_THROWS_AS(layer_opt(p), Error);
  }
  SECTION("negative power") {
    p.edges = {{0, 0}};
    p.powers[0] = Power::finite(-1.0);
    REQUIRE_THROWS_AS(layer_opt(p), NegativePower);
  }
}

TEST_CASE("cut_capacity closed forms") {
  LayeredNetwork net = dag_to_layered(testutil::relay_mesh(15.0, 9.5));
  SECTION("all edges out of the source") {
    REQUIRE(cut_capacity(net, {{"s", "n2"}, {"s", "n3"}}) ==
            Catch::Approx(2.0 * std::log2(16.0)).margin(1e-12));
  }
  SECTION("all edges into the destination") {
    REQUIRE(cut_capacity(net, {{"n4", "d"}, {"n5", "d"}}) ==
            Catch::Approx(std::log2(31.0) + std::log2(10.5)).margin(1e-12));
  }
  SECTION("non-separating edge set throws") {
    REQUIRE_THROWS_AS(cut_capacity(net, {{"s", "n2"}, {"n4", "d"}}), NotACut);
  }
  SECTION("unknown edge throws") {
    REQUIRE_THROWS_AS(cut_capacity(net, {{"s", "n4"}}), UnknownNode);
  }
  SECTION("cut through an unbounded node has infinite capacity") {
    DagNetwork dag = make_dag({{"s", Power::finite(1)},
                               {"x", Power::infinite()},
                               {"d", Power::finite(0)}},
                              {{"s", "x"}, {"x", "d"}}, "s", "d");
    LayeredNetwork ln = dag_to_layered(dag);
    REQUIRE(std::isinf(cut_capacity(ln, {{"x", "d"}})));
  }
}
