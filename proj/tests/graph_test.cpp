// Tests for digraph generation, mixing matrices and Perron vectors.
// The oracles here are intentionally naive: BFS reachability for strong
// connectivity and explicit spanning-tree-root enumeration for the
// Perron-support identity.

#include "pushpull/graph.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <vector>

using namespace pushpull;

namespace {

// visits reachable from src along directed edges
std::vector<bool> bfs_reach(const std::vector<std::vector<int>>& out, int src) {
  std::vector<bool> seen(out.size(), false);
  std::vector<int> stack{src};
  seen[static_cast<std::size_t>(src)] = true;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : out[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        stack.push_back(w);
      }
  }
  return seen;
}

bool strongly_connected(const Digraph& g) {
  for (int s = 0; s < g.n; ++s) {
    const auto seen = bfs_reach(g.out, s);
    for (bool b : seen)
      if (!b) return false;
  }
  return true;
}

// spanning-tree roots: nodes from which every node is reachable
std::vector<int> roots_by_reachability(const std::vector<std::vector<int>>& out) {
  std::vector<int> roots;
  for (int s = 0; s < static_cast<int>(out.size()); ++s) {
    const auto seen = bfs_reach(out, s);
    bool all = true;
    for (bool b : seen) all = all && b;
    if (all) roots.push_back(s);
  }
  return roots;
}

Digraph digraph_from_adj(int n, const std::vector<std::vector<char>>& adj) {
  Digraph g;
  g.n = n;
  g.out.assign(static_cast<std::size_t>(n), {});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
        g.out[static_cast<std::size_t>(i)].push_back(j);
  return g;
}

}  // namespace

TEST(Digraph, SingleNodeIsSelfLoopOnly) {
  const Digraph g = generate_digraph(1, 0.7, 123);
  EXPECT_EQ(g.n, 1);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_TRUE(g.has_edge(0, 0));
}

TEST(Digraph, ZeroExtraProbGivesRingPlusSelfLoops) {
  const Digraph g = generate_digraph(4, 0.0, 7);
  EXPECT_EQ(g.edge_count(), 8u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_TRUE(g.has_edge(i, i));
    EXPECT_TRUE(g.has_edge(i, (i + 1) % 4));
  }
}

TEST(Digraph, GeneratedGraphsAreStronglyConnected) {
  EXPECT_TRUE(strongly_connected(generate_digraph(30, 0.1, 3)));
  int n = 1;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    n = 1 + static_cast<int>((seed * 7) % 23);
    const double prob = (seed % 3) * 0.08;
    EXPECT_TRUE(strongly_connected(generate_digraph(n, prob, seed))) << "seed " << seed;
  }
}

TEST(Digraph, DeterministicGivenSeed) {
  const Digraph a = generate_digraph(12, 0.3, 99);
  const Digraph b = generate_digraph(12, 0.3, 99);
  EXPECT_EQ(a.out, b.out);
}

TEST(MixingPair, CompleteDigraphIsUniform) {
  const Digraph g = generate_digraph(3, 1.0, 5);
  ASSERT_EQ(g.edge_count(), 9u);
  const MixingPair pair = build_mixing_pair(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(pair.R(i, j), 1.0 / 3.0);
      EXPECT_DOUBLE_EQ(pair.C(i, j), 1.0 / 3.0);
    }
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(pair.u_R(i), 1.0, 1e-9);
    EXPECT_NEAR(pair.u_C(i), 1.0, 1e-9);
  }
}

TEST(MixingPair, FourCycleRowsHaveTwoHalves) {
  const Digraph g = generate_digraph(4, 0.0, 1);
  const MixingPair pair = build_mixing_pair(g);
  for (int i = 0; i < 4; ++i) {
    int halves = 0;
    for (int j = 0; j < 4; ++j)
      if (pair.R(i, j) != 0.0) {
        EXPECT_DOUBLE_EQ(pair.R(i, j), 0.5);
        ++halves;
      }
    EXPECT_EQ(halves, 2);
    EXPECT_NEAR(pair.R.row(i).sum(), 1.0, 1e-15);
  }
}

TEST(MixingPair, TwoNodeOneWayTransmitter) {
  // only node 0 transmits: edges 0->0, 0->1, 1->1
  Digraph g;
  g.n = 2;
  g.out = {{0, 1}, {1}};
  const MixingPair pair = build_mixing_pair(g);
  EXPECT_DOUBLE_EQ(pair.R(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(pair.R(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(pair.R(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(pair.R(1, 1), 0.5);
  EXPECT_NEAR(pair.u_R(0), 2.0, 1e-9);
  EXPECT_NEAR(pair.u_R(1), 0.0, 1e-9);

  const auto rep = check_assumption_one(pair);
  EXPECT_EQ(rep.roots_R, std::vector<int>{0});
  EXPECT_EQ(rep.roots_CT, std::vector<int>{1});
  EXPECT_FALSE(rep.intersection_nonempty);
  EXPECT_NEAR(rep.uR_dot_uC, 0.0, 1e-9);
}

TEST(MixingPair, StochasticityAndPerronInvariants) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const int n = 2 + static_cast<int>(seed % 17);
    const Digraph g = generate_digraph(n, 0.15, seed);
    const MixingPair pair = build_mixing_pair(g);
    const Vector ones = Vector::Ones(n);
    EXPECT_LE((pair.R * ones - ones).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LE((pair.C.transpose() * ones - ones).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LE((pair.R.transpose() * pair.u_R - pair.u_R).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_LE((pair.C * pair.u_C - pair.u_C).lpNorm<Eigen::Infinity>(), 1e-9);
    EXPECT_NEAR(pair.u_R.sum(), n, 1e-9);
    EXPECT_NEAR(pair.u_C.sum(), n, 1e-9);
    // sparsity patterns within the digraph's edges
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (pair.R(i, j) > 0.0) EXPECT_TRUE(g.has_edge(j, i));
        if (pair.C(i, j) > 0.0) EXPECT_TRUE(g.has_edge(j, i));
      }
    const auto rep = check_assumption_one(pair);
    EXPECT_TRUE(rep.intersection_nonempty);
    EXPECT_GT(rep.uR_dot_uC, 0.0);
  }
}

TEST(MixingPair, CompleteDigraphReportHasAllRoots) {
  const MixingPair pair = build_mixing_pair(generate_digraph(4, 1.0, 2));
  const auto rep = check_assumption_one(pair);
  EXPECT_EQ(rep.roots_R.size(), 4u);
  EXPECT_EQ(rep.roots_CT.size(), 4u);
  EXPECT_TRUE(rep.intersection_nonempty);
  EXPECT_NEAR(rep.uR_dot_uC, 4.0, 1e-8);
}

TEST(MixingPair, DisjointSupportsDetected) {
  // chain 0 -> 1 -> 2 for R (roots {0}); reversed chain for C (u_C on node 2)
  MixingPair pair;
  pair.R.resize(3, 3);
  pair.R << 1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 0.5;
  pair.C.resize(3, 3);
  pair.C << 0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.5, 1.0;
  pair.u_R = perron_right(pair.R.transpose());
  pair.u_C = perron_right(pair.C);
  const auto rep = check_assumption_one(pair);
  EXPECT_EQ(rep.roots_R, std::vector<int>{0});
  EXPECT_EQ(rep.roots_CT, std::vector<int>{2});
  EXPECT_FALSE(rep.intersection_nonempty);
}

// Perron-support == spanning-tree-root identity, exhaustively for n <= 4
// (graphs with a nonempty root set; without one the eigenvector is not
// unique and the comparison is undefined), sampled for n = 5, 6.
TEST(MixingPair, RootSetsMatchReachabilityEnumeration) {
  auto check_graph = [](const Digraph& g) {
    const auto roots = roots_by_reachability(g.out);
    if (roots.empty()) return;
    const MixingPair pair = build_mixing_pair(g);
    const auto rep = check_assumption_one(pair);
    EXPECT_EQ(rep.roots_R, roots);
    // u_C support = roots of the reversed digraph
    std::vector<std::vector<int>> rev(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i)
      for (int j : g.out[static_cast<std::size_t>(i)]) rev[static_cast<std::size_t>(j)].push_back(i);
    const auto rev_roots = roots_by_reachability(rev);
    if (!rev_roots.empty()) EXPECT_EQ(rep.roots_CT, rev_roots);
  };

  for (int n = 2; n <= 4; ++n) {
    const int pairs = n * (n - 1);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs); ++mask) {
      std::vector<std::vector<char>> adj(static_cast<std::size_t>(n),
                                         std::vector<char>(static_cast<std::size_t>(n), 0));
      int bit = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (i == j) {
            adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
            continue;
          }
          adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              static_cast<char>((mask >> bit) & 1u);
          ++bit;
        }
      check_graph(digraph_from_adj(n, adj));
    }
  }

  RngStream rng(404);
  for (int n = 5; n <= 6; ++n) {
    for (int trial = 0; trial < 400; ++trial) {
      std::vector<std::vector<char>> adj(static_cast<std::size_t>(n),
                                         std::vector<char>(static_cast<std::size_t>(n), 0));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              (i == j) || (rng.uniform() < 0.3);
      check_graph(digraph_from_adj(n, adj));
    }
  }
}

TEST(GraphIo, EdgeListRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pushpull_graph_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "g.edges").string();
  const Digraph g = generate_digraph(9, 0.25, 31);
  save_edge_list(path, g);
  const Digraph h = load_edge_list(path);
  EXPECT_EQ(g.n, h.n);
  EXPECT_EQ(g.out, h.out);
}

TEST(GraphIo, MatrixCsvWrites) {
  const auto dir = std::filesystem::temp_directory_path() / "pushpull_graph_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "r.csv").string();
  const MixingPair pair = build_mixing_pair(generate_digraph(5, 0.2, 8));
  save_matrix_csv(path, pair.R);
  std::ifstream is(path);
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Digraph, InputValidation) {
  EXPECT_THROW(generate_digraph(0, 0.5, 1), std::invalid_argument);
  EXPECT_THROW(generate_digraph(5, -0.1, 1), std::invalid_argument);
  EXPECT_THROW(generate_digraph(5, 1.5, 1), std::invalid_argument);
}
