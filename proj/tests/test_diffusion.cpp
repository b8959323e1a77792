#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

#include "gaa/diffusion.hpp"
#include "gaa/errors.hpp"
#include "gaa/feature_cache.hpp"
#include "gaa/io.hpp"
#include "gaa/testkit.hpp"
#include "support.hpp"

using namespace gaa;
using gaa::test::graph_of;

namespace {

double inf_gap(std::span<const double> a, const Tensor& b, std::size_t col) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b(i, col)));
  return gap;
}

}  // namespace

TEST(AlphaGrid, ParsesRangeAndList) {
  const auto g = AlphaGrid::parse("0.1:0.9:0.1");
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g.alphas()[2], 0.3);
  EXPECT_EQ(g.alphas()[8], 0.9);
  EXPECT_EQ(g.to_string(), "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9");
  EXPECT_EQ(AlphaGrid::parse("0.5,1").alphas(), (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(AlphaGrid::standard().content_hash(), g.content_hash());
}

TEST(AlphaGrid, RejectsInvalid) {
  EXPECT_THROW(AlphaGrid::parse("0"), InputError);
  EXPECT_THROW(AlphaGrid::parse("1.5"), InputError);
  EXPECT_THROW(AlphaGrid::parse("0.5,0.2"), InputError);
  EXPECT_THROW(AlphaGrid::parse("0.5,0.5"), InputError);
  EXPECT_THROW(AlphaGrid::parse("0.1:0.9"), InputError);
  EXPECT_THROW(AlphaGrid::parse("abc"), InputError);
  EXPECT_THROW(AlphaGrid(std::vector<double>{}), InputError);
}

TEST(Rwr, AlphaOneReturnsSeedExactly) {
  const auto g = testkit::random_connected_graph(15, 10, 3);
  std::vector<double> x0(g.n_nodes(), 0.0);
  x0[4] = 1.0;
  x0[9] = 1.0;
  EXPECT_EQ(rwr_steady_state(g, x0, 1.0), x0);
}

TEST(Rwr, ZeroSeedStaysZero) {
  const auto g = testkit::random_connected_graph(15, 10, 3);
  const std::vector<double> x0(g.n_nodes(), 0.0);
  EXPECT_EQ(rwr_steady_state(g, x0, 0.3), x0);
}

TEST(Rwr, TwoNodeMatchesClosedForm) {
  // 0.5 * (I - 0.5 A)^{-1} e1 with A = [[0,1],[1,0]] is (2/3, 1/3).
  const auto g = graph_of({{"a", "b"}});
  const auto x = rwr_steady_state(g, std::vector<double>{1.0, 0.0}, 0.5, RwrOptions{1e-14, 10'000});
  EXPECT_NEAR(x[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(x[1], 1.0 / 3.0, 1e-12);
  const auto d = dense_rwr_oracle(g, Tensor(2, 1, {1.0, 0.0}), 0.5);
  EXPECT_NEAR(d(0, 0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(d(1, 0), 1.0 / 3.0, 1e-14);
}

TEST(Rwr, DenseOracleIdentityInput) {
  const auto g = graph_of({{"a", "b"}});
  const auto k = dense_rwr_oracle(g, Tensor::identity(2), 0.5);
  EXPECT_NEAR(k(0, 0), 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(k(0, 1), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(k(1, 0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(k(1, 1), 2.0 / 3.0, 1e-14);
  const auto same = dense_rwr_oracle(g, Tensor::identity(2), 1.0);
  EXPECT_LE(max_abs_diff(same, Tensor::identity(2)), 1e-15);
}

TEST(Rwr, IterativeMatchesDenseOracle) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = testkit::random_connected_graph(20, 15, seed);
    const Tensor x = gaa::test::random_tensor(g.n_nodes(), 1, rng, 0.0, 1.0);
    for (double alpha : {0.1, 0.5, 0.9}) {
      const auto it = rwr_steady_state(g, x.data(), alpha, RwrOptions{1e-10, 100'000});
      EXPECT_LE(inf_gap(it, dense_rwr_oracle(g, x, alpha), 0), 1e-8);
    }
  }
}

TEST(Rwr, NonConvergenceIsNumericalError) {
  const auto g = testkit::random_connected_graph(20, 15, 1);
  std::vector<double> x0(g.n_nodes(), 0.0);
  x0[0] = 1.0;
  EXPECT_THROW(rwr_steady_state(g, x0, 0.01, RwrOptions{1e-12, 3}), NumericalError);
}

TEST(Rwr, RejectsBadArguments) {
  const auto g = graph_of({{"a", "b"}});
  EXPECT_THROW(rwr_steady_state(g, std::vector<double>{1.0}, 0.5), InputError);
  EXPECT_THROW(rwr_steady_state(g, std::vector<double>{1.0, 0.0}, 0.0), InputError);
  EXPECT_THROW(rwr_steady_state(g, std::vector<double>{1.0, 0.0}, 0.5, RwrOptions{0.0, 10}), InputError);
}

TEST(Augment, GridOfOneIsRawVector) {
  const auto g = testkit::random_connected_graph(12, 6, 2);
  const std::vector<NodeIndex> targets{1, 7};
  const auto f = augment_compound(g, targets, AlphaGrid::parse("1"));
  ASSERT_EQ(f.matrix.cols(), 1u);
  for (NodeIndex i = 0; i < g.n_nodes(); ++i) EXPECT_EQ(f.matrix(i, 0), (i == 1 || i == 7) ? 1.0 : 0.0);
}

TEST(Augment, NineColumnsEachConservingMass) {
  const auto g = testkit::random_connected_graph(25, 20, 4);
  const std::vector<NodeIndex> targets{0, 3, 11};
  const auto grid = AlphaGrid::standard();
  const auto f = augment_compound(g, targets, grid, RwrOptions{1e-12, 100'000});
  ASSERT_EQ(f.matrix.cols(), 9u);
  Tensor x0(g.n_nodes(), 1);
  for (auto t : targets) x0(t, 0) = 1.0;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    double mass = 0.0;
    for (std::size_t i = 0; i < g.n_nodes(); ++i) mass += f.matrix(i, s);
    EXPECT_NEAR(mass, 3.0, 1e-9);
    const auto oracle = dense_rwr_oracle(g, x0, grid.alphas()[s]);
    for (std::size_t i = 0; i < g.n_nodes(); ++i) EXPECT_NEAR(f.matrix(i, s), oracle(i, 0), 1e-9);
  }
}

TEST(Augment, EmptyCompoundGivesZeros) {
  const auto g = testkit::random_connected_graph(10, 5, 1);
  CompoundSet cs;
  cs.ids = {"empty"};
  cs.targets = {{}};
  const auto f = augment_features(g, cs, AlphaGrid::standard());
  ASSERT_EQ(f.size(), 1u);
  for (double v : f[0].matrix.data()) EXPECT_EQ(v, 0.0);
}

TEST(FeatureCache, RoundTripAndHits) {
  test::TempDir dir("cache");
  const auto g = testkit::random_connected_graph(20, 10, 9);
  CompoundSet cs;
  cs.ids = {"a", "b"};
  cs.targets = {{1, 2}, {5}};
  const auto grid = AlphaGrid::parse("0.2,0.7");
  const FeatureCache cache(dir.path());
  std::size_t hits = 99;
  const auto first = augment_features_cached(g, cs, grid, {}, &cache, &hits);
  EXPECT_EQ(hits, 0u);
  const auto second = augment_features_cached(g, cs, grid, {}, &cache, &hits);
  EXPECT_EQ(hits, 2u);
  for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(first[c].matrix, second[c].matrix);
  EXPECT_EQ(first[0].matrix, augment_compound(g, cs.targets[0], grid).matrix);
}

TEST(FeatureCache, StaleSidecarIsAnError) {
  test::TempDir dir("stale");
  const auto g = testkit::random_connected_graph(20, 10, 9);
  const std::vector<NodeIndex> targets{3};
  const auto grid = AlphaGrid::parse("0.5");
  const FeatureCache cache(dir.path());
  cache.store(g, "c", targets, grid, {}, augment_compound(g, targets, grid));
  ASSERT_TRUE(cache.load(g, "c", targets, grid, {}));
  // Same key, different iteration cap recorded in the sidecar.
  EXPECT_THROW(cache.load(g, "c", targets, grid, RwrOptions{1e-9, 7}), InputError);

  auto bin = cache.entry_path(g, "c", targets, grid, {});
  std::ofstream(bin, std::ios::binary | std::ios::trunc) << "short";
  EXPECT_THROW(cache.load(g, "c", targets, grid, {}), InputError);
}

TEST(FeatureCache, DifferentGraphsUseDifferentEntries) {
  test::TempDir dir("graphs");
  const auto g1 = testkit::random_connected_graph(20, 10, 1);
  const auto g2 = testkit::random_connected_graph(20, 10, 2);
  const FeatureCache cache(dir.path());
  const std::vector<NodeIndex> targets{3};
  const auto grid = AlphaGrid::parse("0.5");
  cache.store(g1, "c", targets, grid, {}, augment_compound(g1, targets, grid));
  EXPECT_FALSE(cache.load(g2, "c", targets, grid, {}));
}
