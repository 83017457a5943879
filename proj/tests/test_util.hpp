#pragma once

// Shared fixtures for the test suite: the reference relay-mesh network used by
// the sweep checks, the two-branch gap network, and a deterministic random
// layered-network generator.

#include <random>
#include <string>
#include <vector>

#include "ehflow/ehflow.hpp"

namespace testutil {

using namespace ehflow;

// Four-relay mesh: s feeds two first-hop relays (budgets p2, p3), each of which
// reaches both second-hop relays (budgets 30 and p5); both forward to d.
inline DagNetwork relay_mesh(double ps, double p5, double p2 = 5.0, double p3 = 6.0) {
  return make_dag({{"s", Power::finite(ps)},
                   {"n2", Power::finite(p2)},
                   {"n3", Power::finite(p3)},
                   {"n4", Power::finite(30.0)},
                   {"n5", Power::finite(p5)},
                   {"d", Power::finite(0.0)}},
                  {{"s", "n2"}, {"s", "n3"}, {"n2", "n4"}, {"n2", "n5"},
                   {"n3", "n4"}, {"n3", "n5"}, {"n4", "d"}, {"n5", "d"}},
                  "s", "d");
}

// Two-branch diamond a -> {b, c} -> d whose max flow falls short of its min cut.
inline DagNetwork two_branch(double pa, double pb, double pc) {
  return make_dag({{"a", Power::finite(pa)},
                   {"b", Power::finite(pb)},
                   {"c", Power::finite(pc)},
                   {"d", Power::finite(0.0)}},
                  {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}}, "a", "d");
}

inline DagNetwork chain(const std::vector<double>& powers) {
  std::vector<std::pair<std::string, Power>> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  for (size_t i = 0; i < powers.size(); ++i)
    nodes.emplace_back("n" + std::to_string(i), Power::finite(powers[i]));
  nodes.emplace_back("d", Power::finite(0.0));
  for (size_t i = 0; i + 1 < powers.size(); ++i)
    edges.emplace_back("n" + std::to_string(i), "n" + std::to_string(i + 1));
  edges.emplace_back("n" + std::to_string(powers.size() - 1), "d");
  return make_dag(nodes, edges, "n0", "d");
}

// Random layered network: K intermediate layers of 1..max_width nodes, powers
// uniform in [0.1, 30]; edges between consecutive layers are a random subset of
// the complete bipartite graph, re-drawn until every layer pair is
// layer-connected and every node keeps at least one edge each way.
inline DagNetwork random_layered(std::mt19937& rng, int max_k = 4, int max_width = 4) {
  std::uniform_real_distribution<double> pw(0.1, 30.0);
  std::uniform_int_distribution<int> kd(1, max_k), wd(1, max_width);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    int K = kd(rng);
    std::vector<int> width(K);
    for (int& w : width) w = wd(rng);

    std::vector<std::pair<std::string, Power>> nodes{{"s", Power::finite(pw(rng))}};
    std::vector<std::vector<std::string>> layer_ids(K);
    for (int k = 0; k < K; ++k)
      for (int a = 0; a < width[k]; ++a) {
        std::string id = "L" + std::to_string(k + 1) + "n" + std::to_string(a);
        layer_ids[k].push_back(id);
        nodes.emplace_back(id, Power::finite(pw(rng)));
      }
    nodes.emplace_back("d", Power::finite(0.0));

    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::string> prev{"s"};
    for (int k = 0; k < K; ++k) {
      for (const auto& u : prev)
        for (const auto& v : layer_ids[k])
          if (coin(rng) < 0.75) edges.emplace_back(u, v);
      prev = layer_ids[k];
    }
    for (const auto& u : prev) edges.emplace_back(u, "d");

    try {
      DagNetwork dag = make_dag(nodes, edges, "s", "d");
      if (dag.node_count() != static_cast<int>(nodes.size())) continue;  // pruning occurred
      LayeredNetwork lay = dag_to_layered(dag);
      if (lay.K() != K) continue;
      bool ok = true;
      for (int k = 1; k <= lay.K() && ok; ++k) ok = is_layer_connected(lay, k);
      if (ok) return dag;
    } catch (const Error&) {
      continue;  // some node lost all its edges; redraw
    }
  }
  throw Error("random_layered: no admissible draw in 100 attempts");
}

}  // namespace testutil
