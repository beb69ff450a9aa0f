#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "graphrank/comparison_graph.hpp"
#include "graphrank/errors.hpp"
#include "graphrank/spectral.hpp"
#include "support/oracles.hpp"

namespace graphrank {
namespace {

using testing::dense_laplacian;
using testing::max_abs;

TEST(BuildGraph, SingleComparison) {
  const std::vector<ComparisonRecord> recs = {{0, 1, 1.0, {}}};
  const ComparisonGraph g = build_graph(recs, 2);
  EXPECT_EQ(g.count(0, 1), 1u);
  EXPECT_DOUBLE_EQ(g.edge(0, 1)->sum, 1.0);
  EXPECT_DOUBLE_EQ(g.scores()[0], 1.0);
  EXPECT_DOUBLE_EQ(g.scores()[1], -1.0);
}

TEST(BuildGraph, FlippedRecordGivesSameGraph) {
  const std::vector<ComparisonRecord> a = {{0, 1, 1.0, {}}};
  const std::vector<ComparisonRecord> b = {{1, 0, -1.0, {}}};
  const ComparisonGraph ga = build_graph(a, 2);
  const ComparisonGraph gb = build_graph(b, 2);
  EXPECT_EQ(ga.count(0, 1), gb.count(0, 1));
  EXPECT_DOUBLE_EQ(ga.edge(0, 1)->sum, gb.edge(0, 1)->sum);
  EXPECT_EQ(ga.scores(), gb.scores());
}

TEST(BuildGraph, FlipNegatesRetainedCovariates) {
  const std::vector<ComparisonRecord> recs = {{1, 0, -2.0, {1.0, -3.0}}};
  const ComparisonGraph g = build_graph(recs, 2, RetainRecords::yes);
  ASSERT_EQ(g.records().size(), 1u);
  EXPECT_EQ(g.records()[0].i, 0u);
  EXPECT_DOUBLE_EQ(g.records()[0].y, 2.0);
  EXPECT_EQ(g.records()[0].x, (std::vector<double>{-1.0, 3.0}));
}

TEST(BuildGraph, WorkedThreeItemScores) {
  const double y121 = 0.7, y231 = 1.1, y232 = -0.4, y233 = 2.5;
  const std::vector<ComparisonRecord> recs = {{0, 1, y121, {}}, {1, 2, y231, {}}, {1, 2, y232, {}}, {1, 2, y233, {}}};
  const ComparisonGraph g = build_graph(recs, 3);
  const Eigen::VectorXd s = g.scores();
  EXPECT_NEAR(s[0], y121, 1e-15);
  EXPECT_NEAR(s[1], -y121 + y231 + y232 + y233, 1e-15);
  EXPECT_NEAR(s[2], -y231 - y232 - y233, 1e-15);
  Eigen::MatrixXd expected(3, 3);
  expected << 1, -1, 0, -1, 4, -3, 0, -3, 3;
  EXPECT_EQ(laplacian(g), expected);
}

TEST(BuildGraph, Errors) {
  const std::vector<ComparisonRecord> out_of_range = {{0, 2, 1.0, {}}};
  EXPECT_THROW(build_graph(out_of_range, 2), DataError);
  const std::vector<ComparisonRecord> self = {{1, 1, 1.0, {}}};
  EXPECT_THROW(build_graph(self, 2), DataError);
  EXPECT_THROW(build_graph({}, 1), DataError);
}

TEST(Laplacian, PathWithGrowingMultiplicity) {
  for (std::size_t m : {1u, 3u, 7u}) {
    GraphBuilder b(3);
    b.add_aggregate(0, 1, m, 0.0, 0.0).add_aggregate(1, 2, m * m, 0.0, 0.0);
    const double md = static_cast<double>(m);
    Eigen::MatrixXd expected(3, 3);
    expected << md, -md, 0, -md, md * md + md, -md * md, 0, -md * md, md * md;
    EXPECT_EQ(laplacian(b.build()), expected);
  }
}

TEST(Laplacian, EmptyEdgeSetIsZero) {
  const ComparisonGraph g = GraphBuilder(4).build();
  EXPECT_EQ(laplacian(g), Eigen::MatrixXd::Zero(4, 4));
}

TEST(Laplacian, WeightOnMissingEdgeIsRejected) {
  GraphBuilder b(3);
  b.add(0, 1, 1.0);
  const ComparisonGraph g = b.build();
  EdgeWeights w;
  w.set(1, 2, 2.0);
  EXPECT_THROW(laplacian(g, &w), DataError);
  EXPECT_THROW(w.set(0, 1, 0.0), DataError);
  EXPECT_THROW(w.set(0, 1, -1.0), DataError);
}

TEST(Laplacian, WeightedEntries) {
  GraphBuilder b(3);
  b.add(0, 1, 1.0).add(0, 1, 2.0).add(1, 2, 1.0);
  EdgeWeights w;
  w.set(1, 0, 0.5);
  const Eigen::MatrixXd n = laplacian(b.build(), &w);
  EXPECT_DOUBLE_EQ(n(0, 1), -1.0);  // 0.5 * 2 comparisons
  EXPECT_DOUBLE_EQ(n(1, 2), -1.0);  // unweighted edge keeps weight 1
  EXPECT_DOUBLE_EQ(n(1, 1), 2.0);
}

TEST(Connectivity, Examples) {
  GraphBuilder path(4);
  path.add(0, 1, 0).add(1, 2, 0).add(2, 3, 0);
  EXPECT_TRUE(is_connected(path.build()));

  GraphBuilder split(4);
  split.add(0, 1, 0).add(2, 3, 0);
  const ComparisonGraph g = split.build();
  EXPECT_FALSE(is_connected(g));
  const auto comps = connected_components(g);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0], (std::vector<ItemIndex>{0, 1}));
  EXPECT_EQ(comps[1], (std::vector<ItemIndex>{2, 3}));

  GraphBuilder complete(8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) complete.add(i, j, 0);
  EXPECT_TRUE(is_connected(complete.build()));
}

TEST(Bottleneck, Examples) {
  GraphBuilder path3(3);
  path3.add_aggregate(0, 1, 5, 0, 0).add_aggregate(1, 2, 25, 0, 0);
  const BottleneckTree t = bottleneck_m(path3.build());
  EXPECT_EQ(t.m, 5u);
  EXPECT_EQ(t.tree.size(), 2u);

  for (std::size_t k : {1u, 10u, 100u}) {
    GraphBuilder path4(4);
    path4.add_aggregate(0, 1, k, 0, 0).add_aggregate(1, 2, 1, 0, 0).add_aggregate(2, 3, k, 0, 0);
    EXPECT_EQ(bottleneck_m(path4.build()).m, 1u);
  }

  GraphBuilder complete(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) complete.add_aggregate(i, j, 6, 0, 0);
  EXPECT_EQ(bottleneck_m(complete.build()).m, 6u);

  GraphBuilder split(4);
  split.add(0, 1, 0).add(2, 3, 0);
  EXPECT_THROW(bottleneck_m(split.build()), IdentifiabilityError);
}

// Brute force over all spanning trees of a small graph.
std::size_t brute_force_bottleneck(const ComparisonGraph& g) {
  std::vector<std::pair<EdgeKey, std::size_t>> edges;
  for (const auto& [e, s] : g.edges()) edges.emplace_back(e, s.count);
  const std::size_t k = g.item_count();
  std::size_t best = 0;
  const std::size_t subsets = std::size_t{1} << edges.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != k - 1) continue;
    std::vector<std::size_t> parent(k);
    for (std::size_t i = 0; i < k; ++i) parent[i] = i;
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x];
      return x;
    };
    bool tree = true;
    std::size_t low = ~std::size_t{0};
    for (std::size_t e = 0; e < edges.size() && tree; ++e) {
      if (!(mask >> e & 1)) continue;
      const std::size_t a = find(edges[e].first.i), b = find(edges[e].first.j);
      if (a == b) tree = false;
      parent[a] = b;
      low = std::min(low, edges[e].second);
    }
    if (tree) best = std::max(best, low);
  }
  return best;
}

TEST(GraphProperties, RandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 2 + trial % 6;
    auto data = testing::random_connected(rng, k, 0.4, 5);
    const ComparisonGraph g = build_graph(data.records, k);

    EXPECT_EQ(g.total_comparisons(), data.records.size());
    const Eigen::VectorXd s = g.scores();
    EXPECT_LE(std::abs(s.sum()), 1e-9 * std::max(1.0, s.cwiseAbs().sum()));

    const Eigen::MatrixXd n = laplacian(g);
    EXPECT_EQ(n, dense_laplacian(g));
    EXPECT_LE(max_abs(n * Eigen::VectorXd::Ones(n.rows())), 0.0);
    const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(n).eigenvalues();
    EXPECT_GE(eig.minCoeff(), -1e-9 * eig.maxCoeff());
    for (Eigen::Index i = 0; i < n.rows(); ++i) EXPECT_EQ(n(i, i), g.degrees()[i]);

    // Record order does not matter.
    auto shuffled = data.records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const ComparisonGraph g2 = build_graph(shuffled, k);
    EXPECT_EQ(laplacian(g2), n);
    EXPECT_LE(max_abs(g2.scores() - s), 1e-12);

    // The reported tree attains the bottleneck, and no tree does better.
    const BottleneckTree bt = bottleneck_m(g);
    ASSERT_EQ(bt.tree.size(), k - 1);
    std::size_t low = ~std::size_t{0};
    for (const EdgeKey& e : bt.tree) low = std::min(low, g.count(e.i, e.j));
    EXPECT_EQ(bt.m, low);
    if (g.edges().size() <= 16) {
      EXPECT_EQ(bt.m, brute_force_bottleneck(g));
    }

    // One more record: counts and lambda2 never decrease.
    std::uniform_int_distribution<std::size_t> item(0, k - 1);
    std::size_t a = item(rng), b = item(rng);
    if (a == b) b = (a + 1) % k;
    auto more = data.records;
    more.push_back({a, b, 0.3, {}});
    const ComparisonGraph g3 = build_graph(more, k);
    for (const auto& [e, st] : g.edges()) EXPECT_GE(g3.count(e.i, e.j), st.count);
    EXPECT_GE(spectral_summary(laplacian(g3)).lambda2, spectral_summary(n).lambda2 - 1e-10);
  }
}

TEST(GraphBuilder, AggregateMatchesRecords) {
  GraphBuilder a(3), b(3);
  a.add(0, 1, 1.0).add(0, 1, 3.0).add(2, 1, 2.0);
  b.add_aggregate(0, 1, 2, 4.0, 10.0).add_aggregate(2, 1, 1, 2.0, 4.0);
  const ComparisonGraph ga = a.build(), gb = b.build();
  EXPECT_EQ(laplacian(ga), laplacian(gb));
  EXPECT_EQ(ga.scores(), gb.scores());
  EXPECT_DOUBLE_EQ(ga.edge(1, 2)->sum_sq, gb.edge(1, 2)->sum_sq);
  EXPECT_THROW(GraphBuilder(3, RetainRecords::yes).add_aggregate(0, 1, 1, 0, 0), DataError);
}

TEST(GraphBuilder, Labels) {
  GraphBuilder b(2);
  b.add(0, 1, 1.0).labels({"ann", "bob"});
  const ComparisonGraph g = b.build();
  EXPECT_EQ(g.label(1), "bob");
  EXPECT_EQ(GraphBuilder(2).build().label(1), "1");
}

}  // namespace
}  // namespace graphrank
