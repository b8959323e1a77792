#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gaa/baseline.hpp"
#include "gaa/errors.hpp"
#include "gaa/testkit.hpp"
#include "gaa/training.hpp"
#include "support.hpp"

using namespace gaa;

namespace {

struct Data {
  Tensor x;
  std::vector<int> y;
};

// Two Gaussian blobs in 3-D, one fifth positive.
Data blobs(std::size_t n, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Data d{Tensor(n, 3), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 5 == 0 ? 1 : 0;
    for (std::size_t j = 0; j < 3; ++j) d.x(i, j) = g(rng) + (y == 1 ? shift : 0.0);
    d.y.push_back(y);
  }
  return d;
}

double gradient_norm(const LinearModel& m, const Data& d, const std::array<double, 2>& w) {
  std::vector<double> grad;
  logistic_objective(m, d.x, d.y, w, &grad);
  double s = 0.0;
  for (double v : grad) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST(Logistic, SeparableToyIsClassifiedPerfectly) {
  const auto d = blobs(100, 8.0, 1);
  const auto w = class_weights(d.y);
  const auto m = fit_logistic(d.x, d.y, w);
  for (std::size_t i = 0; i < d.y.size(); ++i) EXPECT_EQ(baseline_predict(m, d.x.row(i)) >= 0.5, d.y[i] == 1);
}

TEST(Logistic, GradientVanishesAtSolution) {
  const auto d = blobs(200, 1.0, 2);
  const auto w = class_weights(d.y);
  const auto m = fit_logistic(d.x, d.y, w);
  EXPECT_LE(gradient_norm(m, d, w), 1e-6);
}

TEST(Logistic, ObjectiveGradientMatchesFiniteDifferences) {
  const auto d = blobs(40, 1.0, 3);
  const std::array<double, 2> cw{0.6, 2.5};
  LinearModel m{{0.3, -0.2, 0.5}, 0.1, 0.05};
  std::vector<double> grad;
  logistic_objective(m, d.x, d.y, cw, &grad);
  ASSERT_EQ(grad.size(), 4u);
  const double h = 1e-6;
  for (std::size_t k = 0; k < 4; ++k) {
    auto up = m, down = m;
    (k < 3 ? up.w[k] : up.b) += h;
    (k < 3 ? down.w[k] : down.b) -= h;
    const double fd = (logistic_objective(up, d.x, d.y, cw) - logistic_objective(down, d.x, d.y, cw)) / (2 * h);
    EXPECT_NEAR(grad[k], fd, 1e-8);
  }
}

TEST(Logistic, FlippingLabelsNegatesTheModel) {
  const auto d = blobs(120, 1.5, 4);
  const auto w = class_weights(d.y);
  std::vector<int> flipped;
  for (int y : d.y) flipped.push_back(1 - y);
  const auto a = fit_logistic(d.x, d.y, w);
  const auto b = fit_logistic(d.x, flipped, {w[1], w[0]});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.w[j], -b.w[j], 1e-5);
  EXPECT_NEAR(a.b, -b.b, 1e-5);
}

TEST(Logistic, HeavyPenaltyGivesHalf) {
  const auto d = blobs(100, 2.0, 5);
  LogisticOptions opts;
  opts.l2 = 1e6;
  const auto m = fit_logistic(d.x, d.y, class_weights(d.y), opts);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(baseline_predict(m, d.x.row(i)), 0.5, 1e-4);
}

TEST(Logistic, RejectsBadInput) {
  const auto d = blobs(20, 1.0, 6);
  EXPECT_THROW(fit_logistic(d.x, std::vector<int>(20, 0), {1.0, 1.0}), InputError);
  EXPECT_THROW(fit_logistic(d.x, std::vector<int>(19, 0), {1.0, 1.0}), InputError);
  LogisticOptions bad;
  bad.l2 = -1.0;
  EXPECT_THROW(fit_logistic(d.x, d.y, {1.0, 1.0}, bad), InputError);
  EXPECT_THROW(baseline_predict(LinearModel{{1.0}, 0.0, 0.0}, d.x.row(0)), InputError);
}

TEST(BaselineFeatures, AreTheRwrProfile) {
  const auto g = testkit::random_connected_graph(20, 10, 9);
  const std::vector<NodeIndex> targets{2, 11};
  const auto f = baseline_features(g, targets, 0.5);
  std::vector<double> x0(20, 0.0);
  x0[2] = x0[11] = 1.0;
  EXPECT_EQ(f, rwr_steady_state(g, x0, 0.5));
}
