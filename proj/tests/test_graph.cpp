#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "mintdro/graph.hpp"
#include "oracles.hpp"

using namespace mintdro;

namespace {

void expect_invariants(const Graph& g) {
  const auto& A = g.adjacency();
  ASSERT_EQ(A.rows(), g.size());
  for (int i = 0; i < g.size(); ++i) {
    EXPECT_EQ(A(i, i), 0.0);
    for (int j = 0; j < g.size(); ++j) {
      EXPECT_EQ(A(i, j), A(j, i));
      EXPECT_TRUE(A(i, j) == 0.0 || A(i, j) == 1.0);
    }
  }
  EXPECT_EQ(static_cast<double>(g.edge_count()), A.sum() / 2.0);
}

Graph star(int leaves, int offset = 0, int n = 0) {
  std::vector<Edge> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(offset, offset + i);
  return Graph(n ? n : leaves + 1, e);
}

}  // namespace

TEST(Graph, NormalizesLoopsAndDuplicates) {
  Graph g(3, {{0, 1}, {1, 0}, {1, 1}, {1, 2}});
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.self_loops_dropped(), 1u);
  EXPECT_EQ(g.duplicates_dropped(), 1u);
  expect_invariants(g);
}

TEST(Graph, RejectsBadEndpoints) {
  EXPECT_THROW(Graph(2, {{0, 2}}), std::out_of_range);
  EXPECT_THROW(Graph(0, {}), std::invalid_argument);
}

TEST(Generators, BarabasiAlbertEdgeCounts) {
  const int expected[] = {375, 496, 615};
  for (int m = 3; m <= 5; ++m)
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      Graph g = generate_ba(128, m, seed);
      EXPECT_EQ(g.edge_count(), static_cast<std::size_t>(expected[m - 3]));
      EXPECT_TRUE(g.is_connected());
      expect_invariants(g);
    }
}

TEST(Generators, BarabasiAlbertGeneralCount) {
  for (int n : {5, 17, 40})
    for (int m = 1; m < n; m += 3) EXPECT_EQ(generate_ba(n, m, 11).edge_count(), static_cast<std::size_t>(m * (n - m)));
}

TEST(Generators, BarabasiAlbertSmallest) {
  Graph g = generate_ba(2, 1, 5);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_DOUBLE_EQ(stats(g).density, 1.0);
}

TEST(Generators, BarabasiAlbertRejects) {
  EXPECT_THROW(generate_ba(5, 0, 1), std::invalid_argument);
  EXPECT_THROW(generate_ba(5, 5, 1), std::invalid_argument);
}

TEST(Generators, BarabasiAlbertDensityMatchesTable) {
  EXPECT_NEAR(stats(generate_ba(128, 3, 1)).density, 0.0461, 5e-5);
}

TEST(Generators, WattsStrogatzEdgeCounts) {
  const std::pair<int, int> cases[] = {{10, 640}, {14, 896}, {20, 1280}};
  for (auto [k, edges] : cases)
    for (double p : {0.0, 0.2, 0.7, 1.0}) {
      Graph g = generate_ws(128, k, p, 3);
      EXPECT_EQ(g.edge_count(), static_cast<std::size_t>(edges)) << "k=" << k << " p=" << p;
      EXPECT_EQ(g.self_loops_dropped() + g.duplicates_dropped(), 0u);
      expect_invariants(g);
    }
}

TEST(Generators, WattsStrogatzRingWithoutRewiring) {
  Graph g = generate_ws(6, 2, 0.0, 1);
  EXPECT_EQ(g.edge_count(), 6u);
  for (int v = 0; v < 6; ++v) {
    EXPECT_EQ(g.degree(v), 2);
    EXPECT_TRUE(g.has_edge(v, (v + 1) % 6));
  }
}

TEST(Generators, WattsStrogatzRejects) {
  EXPECT_THROW(generate_ws(10, 3, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(generate_ws(10, 10, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(generate_ws(10, 4, 1.5, 1), std::invalid_argument);
}

TEST(Generators, SeedDeterminism) {
  EXPECT_EQ(generate_ba(50, 3, 9).edges(), generate_ba(50, 3, 9).edges());
  EXPECT_EQ(generate_ws(50, 6, 0.3, 9).edges(), generate_ws(50, 6, 0.3, 9).edges());
}

TEST(EdgeList, PathGraph) {
  std::istringstream in("0 1\n1 2\n");
  Graph g = load_edge_list(in);
  EXPECT_EQ(g.size(), 3);
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(EdgeList, DuplicateCollapse) {
  std::istringstream in("a b\nb a\n");
  Graph g = load_edge_list(in);
  EXPECT_EQ(g.size(), 2);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.label(0), "a");
  EXPECT_EQ(g.label(1), "b");
  EXPECT_EQ(g.duplicates_dropped(), 1u);
}

TEST(EdgeList, CommentsBlankLinesAndLoops) {
  std::istringstream in("# header\n\nx y\n  # indented\ny y\ny z\r\n");
  Graph g = load_edge_list(in);
  EXPECT_EQ(g.size(), 3);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.self_loops_dropped(), 1u);
}

TEST(EdgeList, ParseErrorCarriesLine) {
  std::istringstream in("0 1\n# c\n2\n");
  try {
    load_edge_list(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream extra("0 1 2\n");
  EXPECT_THROW(load_edge_list(extra), ParseError);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(load_edge_list(empty), ParseError);
}

TEST(Subsample, FullSizeKeepsGraph) {
  Graph g = generate_ba(20, 2, 4);
  Graph s = subsample_nodes(g, 20, 8);
  EXPECT_EQ(s.size(), 20);
  EXPECT_EQ(s.edge_count(), g.edge_count());
}

TEST(Subsample, CliqueGivesClique) {
  std::vector<Edge> e;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) e.emplace_back(i, j);
  Graph k5(5, e);
  Graph s = subsample_nodes(k5, 3, 2);
  EXPECT_EQ(s.edge_count(), 3u);
}

TEST(Subsample, PreservesAdjacency) {
  Graph g = generate_ws(40, 6, 0.3, 5);
  Graph s = subsample_nodes(g, 15, 77);
  for (int u = 0; u < s.size(); ++u)
    for (int v = 0; v < s.size(); ++v) {
      const int pu = std::stoi(s.label(u)), pv = std::stoi(s.label(v));
      EXPECT_EQ(s.has_edge(u, v), g.has_edge(pu, pv));
    }
  EXPECT_THROW(subsample_nodes(g, 41, 1), std::invalid_argument);
}

TEST(Strategic, StarCenter) {
  EXPECT_EQ(greedy_strategic_nodes(star(5), 1), (NodeSet{0}));
}

TEST(Strategic, TwoStars) {
  std::vector<Edge> e;
  for (int i = 1; i <= 5; ++i) e.emplace_back(0, i);
  for (int i = 7; i <= 9; ++i) e.emplace_back(6, i);
  Graph g(10, e);
  NodeSet s = greedy_strategic_nodes(g, 2);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(s, (NodeSet{0, 6}));
}

TEST(Strategic, TieBreakLowestIndex) {
  Graph g(4, {{0, 1}, {2, 3}});
  EXPECT_EQ(greedy_strategic_nodes(g, 1), (NodeSet{0}));
}

TEST(Strategic, ApproximationAgainstExhaustive) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = oracle::random_graph(10, 0.4, rng);
    int best = 0;
    for (int a = 0; a < 10; ++a)
      for (int b = a + 1; b < 10; ++b) best = std::max(best, coverage(g, {a, b}));
    const NodeSet greedy = greedy_strategic_nodes(g, 2);
    EXPECT_GE(coverage(g, greedy), (1.0 - 1.0 / std::exp(1.0)) * best);
    EXPECT_EQ(greedy, greedy_strategic_nodes(g, 2));
  }
}

TEST(Stats, TriangleAndPath) {
  Graph tri(3, {{0, 1}, {1, 2}, {0, 2}});
  EXPECT_DOUBLE_EQ(stats(tri).density, 1.0);
  EXPECT_DOUBLE_EQ(stats(tri).clustering_coeff, 1.0);
  Graph path(3, {{0, 1}, {1, 2}});
  EXPECT_DOUBLE_EQ(stats(path).clustering_coeff, 0.0);
}

TEST(Stats, TriangleWithPendant) {
  // Local clustering 1, 1, 1/3, 0.
  Graph g(5, {{0, 1}, {1, 2}, {0, 2}, {2, 3}});
  const GraphStats s = stats(g);
  EXPECT_DOUBLE_EQ(s.clustering_coeff, (1.0 + 1.0 + 1.0 / 3.0) / 5.0);
  EXPECT_DOUBLE_EQ(s.zero_degree_fraction, 0.2);
  EXPECT_DOUBLE_EQ(s.density, 2.0 * 4 / 20.0);
}

// Runs only when the Facebook combined edge list is available.
TEST(Facebook, SizeAndSubsampleSparsity) {
  const char* path = std::getenv("MINTDRO_FACEBOOK_EDGES");
  if (!path) GTEST_SKIP() << "set MINTDRO_FACEBOOK_EDGES to the Facebook edge list";
  std::ifstream in(path);
  ASSERT_TRUE(in) << path;
  Graph g = load_edge_list(in);
  EXPECT_EQ(g.size(), 4039);
  EXPECT_EQ(g.edge_count(), 88234u);
  double zero = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) zero += stats(subsample_nodes(g, 500, seed)).zero_degree_fraction;
  zero /= 30.0;
  EXPECT_GT(zero, 0.05);
  EXPECT_LT(zero, 0.30);
}
