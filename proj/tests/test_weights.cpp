#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "tacitdcf/weights.hpp"

using namespace tacitdcf;

namespace {

CascadeErrors same_errors(const std::vector<double>& z) { return {z, z, z, z, z}; }

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(UpdateWeights, TwoLayerHandCase) {
  const auto u = update_weights(LayerWeights::uniform(2), same_errors({1.0, 3.0}), 1e-4);
  for (Family f : kFamilies) {
    EXPECT_NEAR(u.weights.family(f)[0], 0.75, 1e-12);
    EXPECT_NEAR(u.weights.family(f)[1], 0.25, 1e-12);
  }
  EXPECT_FALSE(u.any_fallback());
}

TEST(UpdateWeights, FamiliesSumToOne) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 5;
    CascadeErrors e;
    for (auto* v : {&e.a, &e.b, &e.c, &e.d, &e.e}) {
      v->resize(n);
      for (double& z : *v) z = u(rng);
    }
    const auto w = update_weights(LayerWeights::uniform(n), e, 1e-4).weights;
    for (Family f : kFamilies) {
      EXPECT_NEAR(sum(w.family(f)), 1.0, 1e-12);
      for (double x : w.family(f)) EXPECT_GE(x, 0.0);
    }
  }
}

TEST(UpdateWeights, LargerErrorNeverGetsMoreWeight) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 6;
    std::vector<double> z(n);
    for (double& v : z) v = u(rng);
    const auto w = update_weights(LayerWeights::uniform(n), same_errors(z), 1e-4).weights.a;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (z[i] > z[j]) EXPECT_LE(w[i], w[j]);
  }
}

TEST(UpdateWeights, SingleLayerFallsBackToUniform) {
  const auto u = update_weights(LayerWeights::uniform(1), same_errors({2.0}), 1e-4);
  EXPECT_TRUE(u.any_fallback());
  for (Family f : kFamilies) EXPECT_EQ(u.weights.family(f), std::vector<double>{1.0});
}

TEST(UpdateWeights, EqualErrorsStayUniform) {
  const auto u = update_weights(LayerWeights::uniform(4), same_errors({0.5, 0.5, 0.5, 0.5}), 1e-4);
  for (Family f : kFamilies)
    for (double x : u.weights.family(f)) EXPECT_NEAR(x, 0.25, 1e-12);
}

TEST(UpdateWeights, RejectsBadInput) {
  EXPECT_THROW(update_weights(LayerWeights::uniform(2), same_errors({1.0, 1.0}), 0.0), InvalidArgument);
  EXPECT_THROW(update_weights(LayerWeights::uniform(2), same_errors({1.0, -1.0}), 1e-4), InvalidArgument);
  EXPECT_THROW(update_weights(LayerWeights::uniform(2), same_errors({1.0}), 1e-4), InvalidArgument);
}

TEST(ErrorCascade, HandCase) {
  ObjectiveBreakdown b;
  b.layers.push_back({1.0, 2.0, 3.0, 4.0, 5.0});
  LayerWeights w{{0.5}, {0.25}, {2.0}, {1.0}, {1.0}};
  const auto e = error_cascade(b, w);
  EXPECT_DOUBLE_EQ(e.a[0], 1.0);
  EXPECT_DOUBLE_EQ(e.b[0], 0.5 + 2.0);
  EXPECT_DOUBLE_EQ(e.c[0], 0.5 + 0.625 + 3.0);
  EXPECT_DOUBLE_EQ(e.d[0], 0.5 + 0.625 + 8.25 + 4.0);
  EXPECT_DOUBLE_EQ(e.e[0], 0.5 + 0.625 + 8.25 + 13.375 + 5.0);
}

TEST(ErrorCascade, RejectsMismatchAndNegativeTerms) {
  ObjectiveBreakdown b;
  b.layers.resize(2);
  EXPECT_THROW(error_cascade(b, LayerWeights::uniform(3)), InvalidArgument);
  b.layers[1].mask = -1.0;
  EXPECT_THROW(error_cascade(b, LayerWeights::uniform(2)), InvalidArgument);
}

TEST(RandomWeights, NormalizedAndDeterministic) {
  std::mt19937_64 r1(42), r2(42), r3(43);
  const auto a = random_weights(5, r1), b = random_weights(5, r2), c = random_weights(5, r3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (Family f : kFamilies) EXPECT_NEAR(sum(a.family(f)), 1.0, 1e-12);
}

TEST(NormalizeFamily, ZeroSumLeavesValues) {
  std::vector<double> v{0.0, 0.0};
  EXPECT_FALSE(normalize_family(v));
  EXPECT_EQ(v, (std::vector<double>{0.0, 0.0}));
}

TEST(UpdateWeights, CoarserEtaStillNearThreeToOne) {
  const auto u = update_weights(LayerWeights::uniform(2), same_errors({1.0, 3.0}), 0.01);
  EXPECT_NEAR(u.weights.a[0], 0.75, 1e-3);
  EXPECT_NEAR(u.weights.a[1], 0.25, 1e-3);
}

TEST(UpdateWeights, SixEqualLayers) {
  const auto u = update_weights(LayerWeights::uniform(6), same_errors(std::vector<double>(6, 2.0)), 0.01);
  for (double v : u.weights.e) EXPECT_NEAR(v, 1.0 / 6.0, 1e-12);
}

TEST(UpdateWeights, PermutationEquivariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(5);
    for (double& v : z) v = u(rng);
    std::vector<std::size_t> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> zp(5);
    for (std::size_t i = 0; i < 5; ++i) zp[i] = z[perm[i]];
    const auto w = update_weights(LayerWeights::uniform(5), same_errors(z), 1e-4).weights.b;
    const auto wp = update_weights(LayerWeights::uniform(5), same_errors(zp), 1e-4).weights.b;
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(wp[i], w[perm[i]], 1e-12);
  }
}
