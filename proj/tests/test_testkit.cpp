#include <gtest/gtest.h>

#include <algorithm>

#include "gaa/errors.hpp"
#include "gaa/testkit.hpp"

using namespace gaa;

TEST(Synth, DeterministicPerSeed) {
  testkit::SynthSpec spec;
  spec.n_compounds = 60;
  const auto a = testkit::generate(spec);
  const auto b = testkit::generate(spec);
  spec.seed += 1;
  const auto c = testkit::generate(spec);
  EXPECT_EQ(a.graph.content_hash(), b.graph.content_hash());
  EXPECT_EQ(a.compounds.targets, b.compounds.targets);
  EXPECT_EQ(a.compounds.labels, b.compounds.labels);
  EXPECT_NE(a.compounds.targets, c.compounds.targets);
}

TEST(Synth, CountsFollowTheSpec) {
  testkit::SynthSpec spec;
  const auto ds = testkit::generate(spec);
  EXPECT_EQ(ds.graph.n_nodes(), spec.n_nodes);
  EXPECT_EQ(ds.modules.n_modules(), spec.n_modules);
  EXPECT_EQ(ds.compounds.size(), spec.n_compounds);
  for (const auto& t : ds.compounds.targets) EXPECT_EQ(t.size(), spec.targets_per_compound());
  const auto pos = std::count(ds.compounds.labels->begin(), ds.compounds.labels->end(), 1);
  EXPECT_EQ(pos, 31);
}

TEST(Synth, TargetsAvoidModuleNeighborhoods) {
  testkit::SynthSpec spec;
  const auto ds = testkit::generate(spec);
  std::vector<bool> near(ds.graph.n_nodes(), false);
  for (const auto& m : ds.modules.members)
    for (auto i : m) {
      near[i] = true;
      for (auto j : ds.graph.neighbors(i)) {
        near[j] = true;
        for (auto k : ds.graph.neighbors(j)) near[k] = true;
      }
    }
  for (const auto& t : ds.compounds.targets)
    for (auto i : t) EXPECT_FALSE(near[i]) << "target " << i;
}

TEST(Synth, LabelsFollowTheRuleWithoutNoise) {
  testkit::SynthSpec spec;
  spec.n_compounds = 80;
  const auto ds = testkit::generate(spec);
  const auto& signal = ds.modules.members[ds.signal_module];
  for (std::size_t c = 0; c < ds.compounds.size(); ++c) {
    const double mass = testkit::module_mass(ds.graph, ds.compounds.targets[c], signal, spec.signal_alpha);
    EXPECT_EQ((*ds.compounds.labels)[c], mass > ds.threshold ? 1 : 0);
  }
}

TEST(Synth, NoiseFlipsSomeLabels) {
  testkit::SynthSpec spec;
  spec.noise_rate = 0.2;
  const auto ds = testkit::generate(spec);
  std::size_t flips = 0;
  for (std::size_t c = 0; c < ds.compounds.size(); ++c)
    flips += (*ds.compounds.labels)[c] != (ds.signal_mass[c] > ds.threshold ? 1 : 0);
  EXPECT_GT(flips, 30u);
  EXPECT_LT(flips, 90u);
}

TEST(Synth, RejectsInvalidSpecs) {
  testkit::SynthSpec spec;
  spec.lattice_degree = 3;
  EXPECT_THROW(testkit::generate(spec), InputError);
  spec = {};
  spec.positive_ratio = 0.001;
  EXPECT_THROW(testkit::generate(spec), InputError);
  spec = {};
  spec.module_exclusion_hops = 50;
  EXPECT_THROW(testkit::generate(spec), InputError);
}

TEST(RandomGraph, IsConnected) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = testkit::random_connected_graph(30, 5, seed);
    EXPECT_EQ(g.n_nodes(), 30u);
  }
}

TEST(NumericGradient, Quadratic) {
  Tensor x(1, 2, {1.0, -2.0});
  const auto g = testkit::numeric_gradient([&] { return x[0] * x[0] + 3.0 * x[1]; }, x);
  EXPECT_NEAR(g[0], 2.0, 1e-8);
  EXPECT_NEAR(g[1], 3.0, 1e-8);
  EXPECT_EQ(x, Tensor(1, 2, {1.0, -2.0}));
}
