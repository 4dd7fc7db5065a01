#include <gtest/gtest.h>

#include <random>

#include "tacitdcf/filter.hpp"
#include "test_support.hpp"

using namespace tacitdcf;
using testing_support::random_tensor;

namespace {

LayerSpec spec_of(std::size_t w, std::size_t h, std::size_t c) { return {0, "t", w, h, c, 1}; }

}  // namespace

TEST(ClosedForm, ZeroRateKeepsState) {
  std::mt19937_64 rng(1);
  const Spectrum x = dft2(random_tensor(8, 8, 2, rng));
  const Spectrum y = dft2(gaussian_label(8, 8, 1.0, {0, 0}));
  const auto s1 = closed_form_update(FilterLayerState::empty(spec_of(8, 8, 2)), x, y, 1.0, 0.01);
  const auto s2 = closed_form_update(s1, dft2(random_tensor(8, 8, 2, rng)), y, 0.0, 0.01);
  EXPECT_EQ(s2.filter, s1.filter);
  EXPECT_EQ(s2.numerator, s1.numerator);
}

TEST(ClosedForm, ReproducesLabelOnTrainingSample) {
  std::mt19937_64 rng(2);
  const FeatureTensor xs = random_tensor(16, 16, 3, rng);
  const FeatureTensor label = gaussian_label(16, 16, 1.5, {0, 0});
  const Spectrum x = dft2(xs);
  const auto s = closed_form_update(FilterLayerState::empty(spec_of(16, 16, 3)), x, dft2(label), 1.0, 1e-8);
  EXPECT_LT(testing_support::max_abs_diff(apply_filter(s, x), label), 1e-5);
}

TEST(ClosedForm, ForgettingBlendsAccumulators) {
  std::mt19937_64 rng(3);
  const Spectrum y = dft2(gaussian_label(8, 8, 1.0, {0, 0}));
  const Spectrum a = dft2(random_tensor(8, 8, 1, rng));
  const Spectrum b = dft2(random_tensor(8, 8, 1, rng));
  auto s = closed_form_update(FilterLayerState::empty(spec_of(8, 8, 1)), a, y, 1.0, 0.5);
  s = closed_form_update(s, b, y, 0.25, 0.5);
  for (std::size_t i = 0; i < 64; ++i) {
    const auto na = std::conj(y.storage()[i]) * a.storage()[i];
    const auto nb = std::conj(y.storage()[i]) * b.storage()[i];
    const double da = std::norm(a.storage()[i]) + 0.5;
    const double db = std::norm(b.storage()[i]) + 0.5;
    EXPECT_NEAR(std::abs(s.filter.storage()[i] - (0.75 * na + 0.25 * nb) / (0.75 * da + 0.25 * db)), 0.0, 1e-10);
  }
}

TEST(ClosedForm, RejectsBadArguments) {
  const auto st = FilterLayerState::empty(spec_of(4, 4, 1));
  const Spectrum x(4, 4, 1), y(4, 4, 1);
  EXPECT_THROW(closed_form_update(st, x, y, 1.5, 0.01), InvalidArgument);
  EXPECT_THROW(closed_form_update(st, x, y, 0.5, 0.0), InvalidArgument);
  EXPECT_THROW(closed_form_update(st, Spectrum(4, 4, 2), y, 0.5, 0.01), InvalidArgument);
}

TEST(SpatialPenalty, ShapeAndSaturation) {
  const auto p = make_spatial_penalty(16, 16, {4.0, 8.0}, 0.1, 10.0);
  EXPECT_DOUBLE_EQ(p(8, 8), 0.1);
  EXPECT_DOUBLE_EQ(p(8, 10), 0.1 + 9.9 * 0.25);  // half the horizontal extent
  EXPECT_DOUBLE_EQ(p(12, 8), 0.1 + 9.9 * 0.25);  // half the vertical extent
  EXPECT_DOUBLE_EQ(p(0, 0), 10.0);
  for (double v : p.values().storage()) {
    EXPECT_GE(v, 0.1);
    EXPECT_LE(v, 10.0);
  }
  EXPECT_THROW(make_spatial_penalty(16, 16, {4, 4}, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(make_spatial_penalty(16, 16, {4, 4}, 2.0, 1.0), InvalidArgument);
  EXPECT_THROW(make_spatial_penalty(16, 16, {0, 4}, 0.1, 1.0), InvalidArgument);
}

TEST(MaskPenalty, MatchesSpatialSum) {
  std::mt19937_64 rng(4);
  const FeatureTensor f = random_tensor(8, 8, 2, rng);
  auto st = FilterLayerState::empty(spec_of(8, 8, 2));
  st.filter = dft2(f);
  const auto p = make_spatial_penalty(8, 8, {2.0, 2.0}, 0.5, 3.0);
  double expected = 0.0;
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      for (std::size_t k = 0; k < 2; ++k) expected += std::pow(p(y, x) * f(y, x, k), 2);
  EXPECT_NEAR(mask_penalty_value(st, p), expected, 1e-10 * expected);
}

TEST(TemporalPenalty, ZeroForSameSampleAndMatchesBruteForce) {
  std::mt19937_64 rng(5);
  const FeatureTensor f = random_tensor(6, 6, 2, rng);
  const FeatureTensor a = random_tensor(6, 6, 2, rng);
  const FeatureTensor b = random_tensor(6, 6, 2, rng);
  auto st = FilterLayerState::empty(spec_of(6, 6, 2));
  st.filter = dft2(f);
  EXPECT_NEAR(temporal_penalty_value(st, dft2(a), dft2(a)), 0.0, 1e-20);
  const double expected = squared_difference(testing_support::brute_correlate(f, a), testing_support::brute_correlate(f, b));
  EXPECT_NEAR(temporal_penalty_value(st, dft2(a), dft2(b)), expected, 1e-9 * expected);
  EXPECT_THROW(temporal_penalty_value(st, dft2(a), Spectrum(6, 6, 1)), InvalidArgument);
}
