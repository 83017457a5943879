#pragma once

// DAG and layered network representations, validation, and the DAG -> layered
// transform (layer index = longest-path distance from the source; edges that
// skip layers are bridged with unbounded pass-through nodes).

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ehflow/errors.hpp"
#include "ehflow/rate.hpp"

namespace ehflow {

struct Edge {
  int from = -1;
  int to = -1;
};

struct RawNode {
  std::string id;
  Power power;
};

// Untrusted, as-parsed description; validate() turns it into a DagNetwork.
struct RawNetwork {
  std::vector<RawNode> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::string source;
  std::string destination;
};

namespace detail {

// Adjacency bookkeeping shared by DagNetwork and LayeredNetwork.
struct GraphCore {
  std::vector<std::string> ids;
  std::vector<Power> powers;
  std::vector<Edge> edges;
  int source = -1;
  int destination = -1;
  std::vector<std::vector<int>> out_edges;  // per node: indices into edges
  std::vector<std::vector<int>> in_edges;
  std::vector<int> topo;  // node indices in topological order

  int node_count() const { return static_cast<int>(ids.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }

  int index_of(const std::string& id) const {
    for (int i = 0; i < node_count(); ++i)
      if (ids[i] == id) return i;
    return -1;
  }

  int find_edge(int u, int v) const {
    for (int e = 0; e < edge_count(); ++e)
      if (edges[e].from == u && edges[e].to == v) return e;
    return -1;
  }

  void build_adjacency() {
    out_edges.assign(ids.size(), {});
    in_edges.assign(ids.size(), {});
    for (int e = 0; e < edge_count(); ++e) {
      out_edges[edges[e].from].push_back(e);
      in_edges[edges[e].to].push_back(e);
    }
  }

  // Kahn topological sort; returns false if a cycle exists.
  bool topo_sort() {
    const int n = node_count();
    std::vector<int> indeg(n, 0);
    for (const auto& e : edges) ++indeg[e.to];
    std::deque<int> q;
    for (int i = 0; i < n; ++i)
      if (indeg[i] == 0) q.push_back(i);
    topo.clear();
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      topo.push_back(u);
      for (int e : out_edges[u])
        if (--indeg[edges[e].to] == 0) q.push_back(edges[e].to);
    }
    return static_cast<int>(topo.size()) == n;
  }
};

}  // namespace detail

struct DagNetwork : detail::GraphCore {};

struct LayeredNetwork : detail::GraphCore {
  std::vector<std::vector<int>> layers;  // L_0 .. L_{K+1}; node indices
  std::vector<int> layer_of;             // per node
  std::vector<int> origin;               // per node: original DAG node index, or -1 for dummies
  int K() const { return static_cast<int>(layers.size()) - 2; }
  bool is_dummy(int node) const { return origin[node] < 0; }
  // Edges whose head lies in layer k (the "pair k" bipartite edge set L_{k-1} -> L_k).
  std::vector<int> pair_edges(int k) const {
    std::vector<int> v;
    for (int j : layers[k])
      for (int e : in_edges[j]) v.push_back(e);
    std::sort(v.begin(), v.end());
    return v;
  }
};

// Validates a raw description into a DagNetwork: rejects cycles, duplicate or
// self-loop edges, negative powers, missing/misused source or destination;
// prunes (with a warning) nodes not on any source->destination path.
inline DagNetwork validate(const RawNetwork& raw, std::vector<std::string>* warnings = nullptr) {
  std::map<std::string, int> index;
  for (const auto& n : raw.nodes) {
    if (index.count(n.id)) throw ParseError("duplicate node id '" + n.id + "'");
    if (n.power.is_finite() && n.power.watts < 0.0)
      throw NegativePower("node '" + n.id + "' has power " + std::to_string(n.power.watts));
    index[n.id] = static_cast<int>(index.size());
  }
  if (!index.count(raw.source))
    throw MissingSourceOrDestination("source '" + raw.source + "' is not a node");
  if (!index.count(raw.destination))
    throw MissingSourceOrDestination("destination '" + raw.destination + "' is not a node");
  if (raw.source == raw.destination)
    throw MissingSourceOrDestination("source and destination coincide");

  DagNetwork net;
  net.ids.reserve(raw.nodes.size());
  for (const auto& n : raw.nodes) {
    net.ids.push_back(n.id);
    net.powers.push_back(n.power);
  }
  net.source = index[raw.source];
  net.destination = index[raw.destination];

  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : raw.edges) {
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end()) throw UnknownNode("edge endpoint '" + a + "'");
    if (ib == index.end()) throw UnknownNode("edge endpoint '" + b + "'");
    if (ia->second == ib->second) throw CycleDetected(a + " -> " + a + " (self loop)");
    if (!seen.insert({ia->second, ib->second}).second)
      throw DuplicateEdge(a + " -> " + b);
    if (ib->second == net.source) throw ParseError("edge into the source: " + a + " -> " + b);
    if (ia->second == net.destination)
      throw ParseError("edge out of the destination: " + a + " -> " + b);
    net.edges.push_back({ia->second, ib->second});
  }

  net.build_adjacency();
  if (!net.topo_sort()) {
    // Find one cycle via DFS for the diagnostic.
    const int n = net.node_count();
    std::vector<int> state(n, 0), parent(n, -1);
    std::string cycle;
    std::function<bool(int)> dfs = [&](int u) {
      state[u] = 1;
      for (int e : net.out_edges[u]) {
        int v = net.edges[e].to;
        if (state[v] == 1) {
          cycle = net.ids[v];
          for (int w = u; w != v && w != -1; w = parent[w]) cycle = net.ids[w] + " -> " + cycle;
          cycle = net.ids[v] + " -> " + cycle;
          return true;
        }
        if (state[v] == 0) {
          parent[v] = u;
          if (dfs(v)) return true;
        }
      }
      state[u] = 2;
      return false;
    };
    for (int i = 0; i < n; ++i)
      if (state[i] == 0 && dfs(i)) break;
    throw CycleDetected(cycle.empty() ? "(unlocated)" : cycle);
  }

  // Keep only nodes on at least one source -> destination path.
  const int n = net.node_count();
  std::vector<bool> fwd(n, false), bwd(n, false);
  {
    std::deque<int> q{net.source};
    fwd[net.source] = true;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int e : net.out_edges[u])
        if (!fwd[net.edges[e].to]) fwd[net.edges[e].to] = true, q.push_back(net.edges[e].to);
    }
    q = {net.destination};
    bwd[net.destination] = true;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int e : net.in_edges[u])
        if (!bwd[net.edges[e].from]) bwd[net.edges[e].from] = true, q.push_back(net.edges[e].from);
    }
  }
  if (!bwd[net.source] || !fwd[net.destination])
    throw MissingSourceOrDestination("no path from source to destination");

  std::vector<int> keep(n, -1);
  DagNetwork pruned;
  for (int i = 0; i < n; ++i) {
    if (fwd[i] && bwd[i]) {
      keep[i] = pruned.node_count();
      pruned.ids.push_back(net.ids[i]);
      pruned.powers.push_back(net.powers[i]);
    } else if (warnings) {
      warnings->push_back("pruned node '" + net.ids[i] + "' (not on any source->destination path)");
    }
  }
  for (const auto& e : net.edges)
    if (keep[e.from] >= 0 && keep[e.to] >= 0) pruned.edges.push_back({keep[e.from], keep[e.to]});
  pruned.source = keep[net.source];
  pruned.destination = keep[net.destination];
  pruned.build_adjacency();
  pruned.topo_sort();
  return pruned;
}

// Longest-path layering from the source; edges spanning more than one layer are
// replaced by chains of unbounded pass-through nodes, one per skipped layer.
inline LayeredNetwork dag_to_layered(const DagNetwork& dag) {
  const int n = dag.node_count();
  std::vector<int> depth(n, 0);
  for (int u : dag.topo)
    for (int e : dag.out_edges[u]) depth[dag.edges[e].to] = std::max(depth[dag.edges[e].to], depth[u] + 1);
  // Destination must sit in the final layer even if its longest path is shorter
  // than some other node's; by reachability pruning every node precedes d, so
  // depth[d] is already the maximum.
  const int last = depth[dag.destination];

  LayeredNetwork net;
  net.ids = dag.ids;
  net.powers = dag.powers;
  net.source = dag.source;
  net.destination = dag.destination;
  net.origin.resize(n);
  net.layer_of.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    net.origin[i] = i;
    net.layer_of[i] = depth[i];
  }
  for (const auto& e : dag.edges) {
    int span = depth[e.to] - depth[e.from];
    if (span == 1) {
      net.edges.push_back(e);
      continue;
    }
    // Bridge with span-1 pass-through nodes.
    int prev = e.from;
    for (int k = 1; k < span; ++k) {
      int dummy = net.node_count();
      net.ids.push_back(dag.ids[e.from] + "~" + dag.ids[e.to] + "~" + std::to_string(k));
      net.powers.push_back(Power::infinite());
      net.origin.push_back(-1);
      net.layer_of.push_back(depth[e.from] + k);
      net.edges.push_back({prev, dummy});
      prev = dummy;
    }
    net.edges.push_back({prev, e.to});
  }
  net.layers.assign(last + 1, {});
  for (int i = 0; i < net.node_count(); ++i) net.layers[net.layer_of[i]].push_back(i);
  net.build_adjacency();
  net.topo_sort();
  return net;
}

// True iff the nodes of layer k are mutually reachable using only pair-k edges
// (the undirected bipartite graph between L_{k-1} and L_k restricted to them).
inline bool is_layer_connected(const LayeredNetwork& net, int k) {
  if (k < 1 || k > net.K() + 1) throw Error("layer index out of range");
  const auto& right = net.layers[k];
  if (right.size() <= 1) return true;
  // Union-find over nodes of both layers via the pair-k edges.
  std::map<int, int> comp;
  std::function<int(int)> find = [&](int x) {
    while (comp[x] != x) x = comp[x] = comp[comp[x]];
    return x;
  };
  for (int j : right) comp[j] = j;
  for (int i : net.layers[k - 1]) comp[i] = i;
  for (int j : right)
    for (int e : net.in_edges[j]) {
      int a = find(net.edges[e].from), b = find(j);
      if (a != b) comp[a] = b;
    }
  int root = find(right[0]);
  for (int j : right)
    if (find(j) != root) return false;
  return true;
}

// Convenience constructor used throughout the tests and tools.
inline DagNetwork make_dag(const std::vector<std::pair<std::string, Power>>& nodes,
                           const std::vector<std::pair<std::string, std::string>>& edges,
                           const std::string& source, const std::string& destination,
                           std::vector<std::string>* warnings = nullptr) {
  RawNetwork raw;
  for (const auto& [id, p] : nodes) raw.nodes.push_back({id, p});
  raw.edges = edges;
  raw.source = source;
  raw.destination = destination;
  return validate(raw, warnings);
}

}  // namespace ehflow
