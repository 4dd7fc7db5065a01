#include <gtest/gtest.h>

#include <random>

#include "tacitdcf/solver.hpp"
#include "dense_oracle.hpp"
#include "test_support.hpp"

using namespace tacitdcf;
using testing_support::random_tensor;

// Once a solve reaches double precision the residual wanders at ~1e-16.
constexpr double kRoundoffFloor = 1e-13;


TEST(GaussSeidel, MatchesDenseSpatialOracle) {
  std::mt19937_64 rng(1);
  const std::vector<FeatureTensor> xs = {random_tensor(8, 8, 2, rng), random_tensor(8, 8, 2, rng)};
  const std::vector<double> a = {0.7, 0.3};
  const FeatureTensor y = gaussian_label(8, 8, 1.0, {0, 0});
  const auto penalty = make_spatial_penalty(8, 8, {3.0, 3.0}, 0.2, 3.0);
  const double lambda = 0.5;

  const std::vector<WeightedSample> samples = {{dft2(xs[0]), a[0]}, {dft2(xs[1]), a[1]}};
  const auto init = FilterLayerState::empty({0, "t", 8, 8, 2, 1});
  const auto r = gauss_seidel_solve(samples, dft2(y), penalty, lambda, 5000, 1e-12, init, 64);
  ASSERT_TRUE(r.report.converged) << r.report.residual;

  const FeatureTensor expected = testing_support::dense_spatial_solve(xs, a, y, penalty.values(), lambda);
  const FeatureTensor got = idft2(r.state.filter);
  EXPECT_LT(testing_support::max_abs_diff(got, expected), 1e-4 * testing_support::max_abs(expected));
}

TEST(GaussSeidel, ConstantPenaltyEqualsClosedForm) {
  std::mt19937_64 rng(2);
  const Spectrum x = dft2(random_tensor(16, 16, 3, rng));
  const Spectrum y = dft2(gaussian_label(16, 16, 1.5, {0, 0}));
  const double c = 0.8, lambda_msk = 0.3;
  const auto penalty = make_spatial_penalty(16, 16, {4.0, 4.0}, c, c);
  const std::vector<WeightedSample> samples = {{x, 1.0}};
  const auto init = FilterLayerState::empty({0, "t", 16, 16, 3, 1});
  const auto gs = gauss_seidel_solve(samples, y, penalty, lambda_msk, 50, 1e-12, init);
  const auto cf = closed_form_update(init, x, y, 1.0, lambda_msk * c * c);
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(gs.state.filter.storage()[i] - cf.filter.storage()[i]));
    scale = std::max(scale, std::abs(cf.filter.storage()[i]));
  }
  EXPECT_LT(worst, 1e-5 * scale);
}

TEST(GaussSeidel, ResidualNeverIncreases) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    std::mt19937_64 rng(seed);
    const Spectrum y = dft2(gaussian_label(16, 16, 1.0, {0, 0}));
    NormalEquations ne(16, 16, 2);
    ne.add_sample(dft2(random_tensor(16, 16, 2, rng)), y, 0.6);
    ne.add_sample(dft2(random_tensor(16, 16, 2, rng)), y, 0.4);
    const auto kernel = penalty_kernel(make_spatial_penalty(16, 16, {4.0, 4.0}, 0.1, 10.0), 21);
    Spectrum v;
    const auto rep = gauss_seidel(ne, kernel, 0.1, v, SolverOptions{30, 0.0, 0.0});
    ASSERT_EQ(rep.residual_history.size(), 30u);
    for (std::size_t i = 1; i < rep.residual_history.size(); ++i)
      EXPECT_LE(rep.residual_history[i], rep.residual_history[i - 1] * (1.0 + 1e-12) + kRoundoffFloor) << "seed " << seed << " sweep " << i;
    EXPECT_LT(rep.residual, 0.5 * rep.residual_history.front()) << "seed " << seed;
  }
}

TEST(GaussSeidel, SingularSystemThrows) {
  NormalEquations ne(4, 4, 2);
  const auto kernel = penalty_kernel(make_spatial_penalty(4, 4, {1.0, 1.0}, 0.1, 1.0), 21);
  Spectrum v;
  EXPECT_THROW(gauss_seidel(ne, kernel, 0.0, v), NumericError);
}

TEST(GaussSeidel, AlreadySolvedTakesNoSweeps) {
  std::mt19937_64 rng(4);
  const Spectrum x = dft2(random_tensor(8, 8, 1, rng));
  const Spectrum y = dft2(gaussian_label(8, 8, 1.0, {0, 0}));
  NormalEquations ne(8, 8, 1);
  ne.add_sample(x, y, 1.0);
  const auto kernel = penalty_kernel(make_spatial_penalty(8, 8, {2.0, 2.0}, 0.1, 5.0), 21);
  Spectrum v;
  gauss_seidel(ne, kernel, 0.1, v, SolverOptions{500, 1e-10, 0.0});
  const auto again = gauss_seidel(ne, kernel, 0.1, v, SolverOptions{500, 1e-6, 0.0});
  EXPECT_EQ(again.sweeps, 0u);
  EXPECT_TRUE(again.converged);
}

TEST(GaussSeidel, RejectsBadSampleWeights) {
  const Spectrum x(4, 4, 1), y(4, 4, 1);
  const auto penalty = make_spatial_penalty(4, 4, {1.0, 1.0}, 0.1, 1.0);
  const auto init = FilterLayerState::empty({0, "t", 4, 4, 1, 1});
  const std::vector<WeightedSample> unnormalized = {{x, 0.5}, {x, 0.3}};
  const std::vector<WeightedSample> negative = {{x, 1.5}, {x, -0.5}};
  EXPECT_THROW(gauss_seidel_solve(unnormalized, y, penalty, 0.1, 5, 1e-6, init), InvalidArgument);
  EXPECT_THROW(gauss_seidel_solve(negative, y, penalty, 0.1, 5, 1e-6, init), InvalidArgument);
  EXPECT_THROW(gauss_seidel_solve(std::span<const WeightedSample>{}, y, penalty, 0.1, 5, 1e-6, init), InvalidArgument);
}

TEST(PenaltyKernel, KeepsConjugatePairsAndRealCenter) {
  const auto p = make_spatial_penalty(12, 10, {3.0, 2.0}, 0.1, 10.0);
  const auto k = penalty_kernel(p, 9);
  EXPECT_GT(k.center, 0.0);
  for (const auto& t : k.off_center) {
    const auto partner = std::find_if(k.off_center.begin(), k.off_center.end(), [&](const PenaltyTap& o) {
      return o.dy == -t.dy && o.dx == -t.dx;
    });
    ASSERT_NE(partner, k.off_center.end());
    EXPECT_NEAR(std::abs(partner->value - std::conj(t.value)), 0.0, 1e-12);
  }
  EXPECT_THROW(penalty_kernel(p, 0), InvalidArgument);
}
