#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gaa/errors.hpp"
#include "gaa/metrics.hpp"
#include "gaa/testkit.hpp"

using namespace gaa;

TEST(Confusion, CountsAtThreshold) {
  const std::vector<double> s{0.9, 0.5, 0.49, 0.1};
  const std::vector<int> y{1, 0, 1, 0};
  const auto c = confusion_at(s, y);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.tn, 1u);
  EXPECT_EQ(accuracy(s, y), 0.5);
  EXPECT_EQ(accuracy(s, y, 0.4), 0.75);
}

TEST(F1, HandCases) {
  EXPECT_NEAR(f1_score(Confusion{2, 1, 5, 1}), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(f1_score(Confusion{0, 0, 4, 0}), 1.0);
  EXPECT_EQ(f1_score(Confusion{0, 2, 4, 0}), 0.0);
  EXPECT_EQ(f1_score(Confusion{0, 0, 4, 3}), 0.0);
  EXPECT_EQ(f1_score(Confusion{3, 0, 0, 0}), 1.0);
}

TEST(Metrics, RejectBadInput) {
  const std::vector<double> s{0.2, 0.3};
  EXPECT_THROW(accuracy(s, std::vector<int>{1}), InputError);
  EXPECT_THROW(accuracy(s, std::vector<int>{1, 2}), InputError);
  EXPECT_THROW(accuracy(std::vector<double>{}, std::vector<int>{}), InputError);
  EXPECT_THROW(aupr(s, std::vector<int>{1, 1}), InputError);
}

TEST(Aupr, HandCase) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<int> y{1, 0, 1, 0};
  EXPECT_NEAR(aupr(s, y), 5.0 / 6.0, 1e-12);
}

TEST(Aupr, TiedScoresFormOneStep) {
  // One group holding everything: recall 1 at precision 1/2.
  EXPECT_EQ(aupr(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 1, 0}), 0.5);
  // Tie between a positive and a negative at the top.
  EXPECT_NEAR(aupr(std::vector<double>{0.9, 0.9, 0.1}, std::vector<int>{1, 0, 1}), 0.5 * 0.5 + 0.5 * 2.0 / 3.0, 1e-15);
}

TEST(Aupr, PerfectRankingIsOne) {
  EXPECT_EQ(aupr(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<int>{1, 1, 0, 0}), 1.0);
}

TEST(Aupr, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 99;
    // Coarse scores force ties on most instances.
    const int levels = 1 + static_cast<int>(rng() % 12);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % static_cast<unsigned>(levels)) / levels;
      y[i] = static_cast<int>(rng() % 3 == 0);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_LE(std::abs(aupr(s, y) - testkit::brute_force_aupr(s, y)), 1e-12) << "trial " << trial;
  }
}

TEST(Aupr, WithoutTiesIsMeanPrecisionAtPositives) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + trial;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = u(rng);
      y[i] = u(rng) < 0.3;
    }
    y[0] = 1;
    y[1] = 0;
    double sum = 0.0;
    int pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] != 1) continue;
      int above = 0, above_pos = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (s[j] >= s[i]) {
          ++above;
          above_pos += y[j];
        }
      sum += static_cast<double>(above_pos) / above;
      ++pos;
    }
    EXPECT_NEAR(aupr(s, y), sum / pos, 1e-12);
  }
}

TEST(EvalReport, SingleClassHasNanAupr) {
  const auto r = evaluate_scores(std::vector<double>{0.2, 0.7}, std::vector<int>{0, 0});
  EXPECT_TRUE(std::isnan(r.aupr));
  EXPECT_EQ(r.acc, 0.5);
  EXPECT_EQ(r.n, 2u);
}

TEST(TableRow, PercentWithTwoDecimals) {
  EvalReport r;
  r.acc = 0.9;
  r.f1 = 0.5;
  r.aupr = 0.625;
  EXPECT_EQ(table_row("GAA", r), "GAA             90.00    50.00    62.50");
  EXPECT_EQ(table_header(), "Method            ACC       F1     AUPR");
}
