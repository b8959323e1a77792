#include <gtest/gtest.h>

#include <cmath>

#include "gaa/autodiff.hpp"
#include "gaa/errors.hpp"
#include "support.hpp"

using namespace gaa;
using gaa::test::fd_check;
using gaa::test::random_tensor;
using V = std::vector<ad::Var>;

namespace {

constexpr double kFdTol = 1e-4;

// Entries pushed at least `margin` away from zero, for ops with a kink there.
Tensor off_kink(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double margin = 0.05) {
  Tensor t = random_tensor(rows, cols, rng);
  for (auto& v : t.data())
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  return t;
}

const ad::SegmentIndex& segments() {
  static const ad::SegmentIndex seg(std::vector<std::uint32_t>{0, 2, 3, 6});
  return seg;
}

}  // namespace

TEST(Tape, SumGradientIsOnes) {
  ad::Tape tape;
  auto w = tape.parameter(Tensor(3, 2, {1, 2, 3, 4, 5, 6}));
  auto s = ad::sum(w);
  EXPECT_EQ(s.value()[0], 21.0);
  tape.backward(s);
  EXPECT_EQ(w.grad(), Tensor(3, 2, 1.0));
}

TEST(Tape, SharedInputGradientsAdd) {
  ad::Tape tape;
  auto x = tape.parameter(Tensor(1, 2, {1.0, -2.0}));
  tape.backward(ad::sum(ad::add(ad::scale(x, 3.0), x)));
  EXPECT_EQ(x.grad(), Tensor(1, 2, 4.0));
}

TEST(Tape, SecondBackwardThrows) {
  ad::Tape tape;
  auto x = tape.parameter(Tensor(1, 1, 2.0));
  auto y = ad::sum(x);
  tape.backward(y);
  EXPECT_THROW(tape.backward(y), InputError);
}

TEST(Tape, NonScalarLossThrows) {
  ad::Tape tape;
  auto x = tape.parameter(Tensor(2, 1, 1.0));
  EXPECT_THROW(tape.backward(x), InputError);
}

TEST(Tape, ConstantsHaveNoGradient) {
  ad::Tape tape;
  auto c = tape.constant(Tensor(1, 1, 2.0));
  auto x = tape.parameter(Tensor(1, 1, 3.0));
  tape.backward(ad::sum(ad::matmul(c, x)));
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_THROW(c.grad(), InputError);
}

TEST(Tape, ShapeMismatchThrows) {
  ad::Tape tape;
  auto a = tape.parameter(Tensor(2, 3));
  auto b = tape.parameter(Tensor(2, 3));
  EXPECT_THROW(ad::matmul(a, b), InputError);
  EXPECT_THROW(ad::add(a, ad::transpose(b)), InputError);
  EXPECT_THROW(ad::broadcast_add_bias(a, tape.parameter(Tensor(1, 2))), InputError);
  EXPECT_THROW(ad::segment_sum(a, segments()), InputError);
}

TEST(SegmentSoftmax, HandExamples) {
  ad::Tape tape;
  auto x = tape.constant(Tensor(3, 1, {0.0, std::log(3.0), 5.0}));
  auto s = ad::segment_softmax(x, ad::SegmentIndex(std::vector<std::uint32_t>{0, 2, 3}));
  EXPECT_NEAR(s.value()[0], 0.25, 1e-15);
  EXPECT_NEAR(s.value()[1], 0.75, 1e-15);
  EXPECT_EQ(s.value()[2], 1.0);
}

TEST(SegmentSoftmax, StableForLargeLogits) {
  ad::Tape tape;
  auto x = tape.constant(Tensor(2, 1, {1000.0, 1000.0}));
  auto s = ad::segment_softmax(x, ad::SegmentIndex(std::vector<std::uint32_t>{0, 2}));
  EXPECT_EQ(s.value()[0], 0.5);
  EXPECT_EQ(s.value()[1], 0.5);
}

TEST(SegmentIndex, FromSortedIds) {
  const std::vector<std::uint32_t> ids{0, 0, 1, 2, 2, 2};
  const auto seg = ad::SegmentIndex::from_sorted_ids(ids, 3);
  EXPECT_EQ(seg.n_segments(), 3u);
  EXPECT_EQ(seg.begin(2), 3u);
  EXPECT_EQ(seg.n_rows(), 6u);
  const std::vector<std::uint32_t> gap{0, 0, 2};
  EXPECT_THROW(ad::SegmentIndex::from_sorted_ids(gap, 3), InputError);
}

TEST(EdgeAggregate, MatchesComposite) {
  std::mt19937_64 rng(5);
  const std::vector<std::uint32_t> src{3, 0, 1, 1, 2, 3};
  ad::Tape tape;
  auto h = tape.parameter(random_tensor(4, 3, rng));
  auto w = tape.parameter(random_tensor(6, 1, rng));
  auto fused = ad::edge_aggregate(h, w, src, segments());
  auto ref = ad::segment_sum(ad::scale_rows(ad::row_select(h, src), w), segments());
  EXPECT_LE(max_abs_diff(fused.value(), ref.value()), 1e-15);
  const std::vector<std::uint32_t> bad{0, 0, 0, 0, 0, 9};
  EXPECT_THROW(ad::edge_aggregate(h, w, bad, segments()), InputError);
}

TEST(CrossEntropy, WeightsOfOneMatchUnweighted) {
  ad::Tape tape;
  auto logits = tape.constant(Tensor(2, 2, {0.3, -0.2, 1.5, 0.1}));
  const std::vector<int> y{1, 0};
  const std::vector<double> ones{1.0, 1.0};
  const double l = ad::cross_entropy_weighted(logits, y, ones).value()[0];
  auto lse = [](double a, double b) { return std::log(std::exp(a) + std::exp(b)); };
  const double manual = 0.5 * ((lse(0.3, -0.2) + 0.2) + (lse(1.5, 0.1) - 1.5));
  EXPECT_NEAR(l, manual, 1e-15);
}

// Every primitive against central differences.
class Gradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};
  Tensor r(std::size_t rows, std::size_t cols) { return random_tensor(rows, cols, rng); }
};

TEST_F(Gradient, Matmul) {
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::matmul(v[0], v[1]); }, {r(3, 4), r(4, 2)}), kFdTol);
}

TEST_F(Gradient, Transpose) {
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::transpose(v[0]); }, {r(3, 2)}), kFdTol);
}

TEST_F(Gradient, Spmm) {
  static const auto a = CsrMatrix::from_triplets(3, 4, {{0, 1, 0.5}, {1, 0, -1.0}, {1, 3, 2.0}, {2, 2, 1.5}});
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::spmm(a, v[0]); }, {r(4, 2)}), kFdTol);
}

TEST_F(Gradient, AddSubScale) {
  auto f = [](ad::Tape&, const V& v) { return ad::scale(ad::sub(ad::add(v[0], v[1]), v[1]), -1.5); };
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::add(v[0], v[1]); }, {r(2, 3), r(2, 3)}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::sub(v[0], v[1]); }, {r(2, 3), r(2, 3)}), kFdTol);
  EXPECT_LE(fd_check(f, {r(2, 3), r(2, 3)}), kFdTol);
}

TEST_F(Gradient, BroadcastBiasAndScaleRows) {
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::broadcast_add_bias(v[0], v[1]); }, {r(4, 3), r(1, 3)}),
            kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::scale_rows(v[0], v[1]); }, {r(4, 3), r(4, 1)}), kFdTol);
}

TEST_F(Gradient, ConcatSliceSelect) {
  static const std::vector<std::uint32_t> rows{2, 0, 2, 1};
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::concat_cols(v); }, {r(3, 1), r(3, 2), r(3, 3)}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::slice_rows(v[0], 1, 3); }, {r(4, 2)}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::row_select(v[0], rows); }, {r(3, 2)}), kFdTol);
}

TEST_F(Gradient, Sum) {
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::sum(v[0]); }, {r(3, 3)}), kFdTol);
}

TEST_F(Gradient, Activations) {
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::leaky_relu(v[0], 0.2); }, {off_kink(4, 3, rng)}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::elu(v[0], 1.0); }, {off_kink(4, 3, rng)}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::elu(v[0], 0.7); }, {off_kink(4, 3, rng)}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::softmax_rows(v[0]); }, {r(3, 4)}), kFdTol);
}

TEST_F(Gradient, SegmentReductions) {
  // Distinct values keep segment_max away from ties.
  Tensor x(6, 2, {0.1, 0.9, 0.5, -0.3, 0.7, 0.2, -0.4, 0.6, 0.8, -0.9, 0.3, 0.4});
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::segment_sum(v[0], segments()); }, {x}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::segment_mean(v[0], segments()); }, {x}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::segment_max(v[0], segments()); }, {x}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::segment_softmax(v[0], segments()); }, {r(6, 1)}), kFdTol);
}

TEST_F(Gradient, EdgeAggregate) {
  static const std::vector<std::uint32_t> src{3, 0, 1, 1, 2, 3};
  auto f = [](ad::Tape&, const V& v) { return ad::edge_aggregate(v[0], v[1], src, segments()); };
  EXPECT_LE(fd_check(f, {r(4, 3), r(6, 1)}), kFdTol);
}

TEST_F(Gradient, Losses) {
  static const std::vector<int> y{1, 0, 0};
  static const std::vector<double> w{0.6, 3.0};
  auto ce = [](ad::Tape&, const V& v) { return ad::cross_entropy_weighted(v[0], y, w); };
  EXPECT_LE(fd_check(ce, {r(3, 2)}), kFdTol);
  EXPECT_LE(fd_check([](ad::Tape&, const V& v) { return ad::l2_loss(v[0], v[1]); }, {r(3, 2), r(3, 2)}), kFdTol);
}

TEST(L2Loss, ZeroAtEqualInputsWithZeroSubgradient) {
  ad::Tape tape;
  auto a = tape.parameter(Tensor(2, 2, 0.5));
  auto b = tape.constant(Tensor(2, 2, 0.5));
  auto l = ad::l2_loss(a, b);
  EXPECT_EQ(l.value()[0], 0.0);
  tape.backward(l);
  EXPECT_EQ(a.grad(), Tensor(2, 2));
}
