#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mintdro/rng.hpp"

namespace mintdro {

using NodeId = int;
using Edge = std::pair<NodeId, NodeId>;
using NodeSet = std::vector<NodeId>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Undirected, unweighted simple graph with a dense 0/1 adjacency matrix.
///
/// Construction normalizes the edge list: self-loops are dropped and
/// duplicate (or reversed) edges are collapsed. The adjacency matrix is
/// therefore always symmetric, binary and zero on the diagonal.
class Graph {
 public:
  Graph() = default;

  Graph(int n, const std::vector<Edge>& edges,
        std::vector<std::string> labels = {})
      : n_(n), adjacency_(Eigen::MatrixXd::Zero(n, n)),
        neighbors_(static_cast<std::size_t>(n)), labels_(std::move(labels)) {
    if (n <= 0) throw std::invalid_argument("Graph: node count must be positive");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != n)
      throw std::invalid_argument("Graph: label count does not match node count");
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw std::out_of_range("Graph: edge endpoint out of range");
      if (u == v) {
        ++self_loops_dropped_;
        continue;
      }
      if (adjacency_(u, v) != 0.0) {
        ++duplicates_dropped_;
        continue;
      }
      adjacency_(u, v) = adjacency_(v, u) = 1.0;
      edges_.emplace_back(std::min(u, v), std::max(u, v));
    }
    for (auto [u, v] : edges_) {
      neighbors_[u].push_back(v);
      neighbors_[v].push_back(u);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
  }

  int size() const { return n_; }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<NodeId>& neighbors(NodeId v) const { return neighbors_[v]; }
  int degree(NodeId v) const { return static_cast<int>(neighbors_[v].size()); }
  bool has_edge(NodeId u, NodeId v) const { return adjacency_(u, v) != 0.0; }

  const std::vector<std::string>& labels() const { return labels_; }
  std::string label(NodeId v) const {
    return labels_.empty() ? std::to_string(v) : labels_[v];
  }

  std::size_t self_loops_dropped() const { return self_loops_dropped_; }
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }

  bool is_connected() const {
    std::vector<char> seen(n_, 0);
    std::vector<NodeId> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : neighbors_[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    return count == n_;
  }

 private:
  int n_ = 0;
  Eigen::MatrixXd adjacency_;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> neighbors_;
  std::vector<std::string> labels_;
  std::size_t self_loops_dropped_ = 0;
  std::size_t duplicates_dropped_ = 0;
};

struct GraphStats {
  double density = 0.0;
  std::size_t edge_count = 0;
  double clustering_coeff = 0.0;
  double zero_degree_fraction = 0.0;
};

/// Preferential attachment. The seed core is m nodes with no edges; the
/// first arrival links to all of them, so the result is connected and has
/// exactly m*(n-m) edges.
inline Graph generate_ba(int n, int m, std::uint64_t seed) {
  if (m <= 0 || m >= n)
    throw std::invalid_argument("generate_ba: need 1 <= m < n");
  Rng rng = make_rng(seed);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m) * (n - m));
  // Each node appears once per incident edge end.
  std::vector<NodeId> repeated;
  repeated.reserve(2 * static_cast<std::size_t>(m) * (n - m));
  std::vector<NodeId> targets(m);
  std::iota(targets.begin(), targets.end(), 0);
  for (NodeId source = m; source < n; ++source) {
    for (NodeId t : targets) {
      edges.emplace_back(source, t);
      repeated.push_back(t);
      repeated.push_back(source);
    }
    // Next targets: m distinct nodes drawn proportional to degree.
    std::vector<NodeId> chosen;
    std::vector<char> taken(n, 0);
    std::uniform_int_distribution<std::size_t> pick(0, repeated.size() - 1);
    while (static_cast<int>(chosen.size()) < m) {
      NodeId c = repeated[pick(rng)];
      if (!taken[c]) {
        taken[c] = 1;
        chosen.push_back(c);
      }
    }
    targets = std::move(chosen);
  }
  return Graph(n, edges);
}

/// Ring lattice with k/2 neighbours per side, each lattice edge rewired
/// with probability p to a uniformly chosen non-neighbour.
inline Graph generate_ws(int n, int k, double p, std::uint64_t seed) {
  if (k <= 0 || k % 2 != 0 || k >= n)
    throw std::invalid_argument("generate_ws: need even k with 0 < k < n");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("generate_ws: rewire probability outside [0,1]");
  Rng rng = make_rng(seed);
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  std::vector<int> deg(n, 0);
  for (int u = 0; u < n; ++u)
    for (int j = 1; j <= k / 2; ++j) {
      int v = (u + j) % n;
      adj[u][v] = adj[v][u] = 1;
      ++deg[u];
      ++deg[v];
    }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int j = 1; j <= k / 2; ++j) {
    for (int u = 0; u < n; ++u) {
      int v = (u + j) % n;
      if (!adj[u][v]) continue;  // already rewired away
      if (coin(rng) >= p) continue;
      if (deg[u] >= n - 1) continue;
      int w = node(rng);
      while (w == u || adj[u][w]) w = node(rng);
      adj[u][v] = adj[v][u] = 0;
      --deg[v];
      adj[u][w] = adj[w][u] = 1;
      ++deg[w];
    }
  }
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (adj[u][v]) edges.emplace_back(u, v);
  return Graph(n, edges);
}

/// Reads a whitespace-separated edge list. Identifiers are mapped to dense
/// indices in first-seen order and kept as labels.
inline Graph load_edge_list(std::istream& in) {
  std::unordered_map<std::string, NodeId> index;
  std::vector<std::string> labels;
  std::vector<Edge> edges;
  auto id_of = [&](const std::string& tok) {
    auto [it, inserted] = index.try_emplace(tok, static_cast<NodeId>(labels.size()));
    if (inserted) labels.push_back(tok);
    return it->second;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a >> b))
      throw ParseError(lineno, "expected two node identifiers");
    if (ss >> extra)
      throw ParseError(lineno, "unexpected trailing token '" + extra + "'");
    NodeId u = id_of(a);
    NodeId v = id_of(b);
    edges.emplace_back(u, v);
  }
  if (labels.empty()) throw ParseError(lineno, "edge list contains no edges");
  int n = static_cast<int>(labels.size());
  return Graph(n, edges, std::move(labels));
}

/// Induced subgraph on the given nodes, relabelled 0..k-1 in the given order.
inline Graph induced_subgraph(const Graph& g, const std::vector<NodeId>& nodes) {
  std::vector<int> pos(g.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = static_cast<int>(i);
  std::vector<Edge> edges;
  for (auto [u, v] : g.edges())
    if (pos[u] >= 0 && pos[v] >= 0) edges.emplace_back(pos[u], pos[v]);
  std::vector<std::string> labels;
  labels.reserve(nodes.size());
  for (NodeId v : nodes) labels.push_back(g.label(v));
  return Graph(static_cast<int>(nodes.size()), edges, std::move(labels));
}

/// Induced subgraph on a uniformly random node subset of size n_sub.
inline Graph subsample_nodes(const Graph& g, int n_sub, std::uint64_t seed) {
  if (n_sub <= 0 || n_sub > g.size())
    throw std::invalid_argument("subsample_nodes: need 0 < n_sub <= n");
  Rng rng = make_rng(seed);
  std::vector<NodeId> perm(g.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 0; i < n_sub; ++i) {
    std::uniform_int_distribution<int> pick(i, g.size() - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  perm.resize(n_sub);
  std::sort(perm.begin(), perm.end());
  return induced_subgraph(g, perm);
}

/// Greedy max-coverage: k rounds, each adding the node whose neighbourhood
/// covers the most not-yet-covered nodes. Ties go to the lowest index.
inline NodeSet greedy_strategic_nodes(const Graph& g, int k) {
  if (k < 0 || k > g.size())
    throw std::invalid_argument("greedy_strategic_nodes: need 0 <= k <= n");
  std::vector<char> covered(g.size(), 0), chosen(g.size(), 0);
  NodeSet result;
  for (int round = 0; round < k; ++round) {
    int best = -1, best_gain = -1;
    for (NodeId v = 0; v < g.size(); ++v) {
      if (chosen[v]) continue;
      int gain = 0;
      for (NodeId u : g.neighbors(v)) gain += covered[u] ? 0 : 1;
      if (gain > best_gain) {
        best_gain = gain;
        best = v;
      }
    }
    chosen[best] = 1;
    result.push_back(best);
    for (NodeId u : g.neighbors(best)) covered[u] = 1;
  }
  return result;
}

/// Number of distinct nodes adjacent to at least one member of `set`.
inline int coverage(const Graph& g, const NodeSet& set) {
  std::vector<char> covered(g.size(), 0);
  int count = 0;
  for (NodeId v : set)
    for (NodeId u : g.neighbors(v))
      if (!covered[u]) {
        covered[u] = 1;
        ++count;
      }
  return count;
}

/// Density, edge count, average local clustering coefficient (nodes of
/// degree < 2 contribute zero) and fraction of isolated nodes.
inline GraphStats stats(const Graph& g) {
  const int n = g.size();
  if (n < 2) throw std::invalid_argument("stats: need at least two nodes");
  GraphStats s;
  s.edge_count = g.edge_count();
  s.density = 2.0 * static_cast<double>(s.edge_count) /
              (static_cast<double>(n) * (n - 1));
  double clustering_sum = 0.0;
  int isolated = 0;
  for (NodeId v = 0; v < n; ++v) {
    const auto& nb = g.neighbors(v);
    const int d = static_cast<int>(nb.size());
    if (d == 0) ++isolated;
    if (d < 2) continue;
    int links = 0;
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        if (g.has_edge(nb[a], nb[b])) ++links;
    clustering_sum += 2.0 * links / (static_cast<double>(d) * (d - 1));
  }
  s.clustering_coeff = clustering_sum / n;
  s.zero_degree_fraction = static_cast<double>(isolated) / n;
  return s;
}

}  // namespace mintdro
