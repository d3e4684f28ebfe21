#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "learn2mix/errors.hpp"
#include "learn2mix/mix.hpp"

using namespace l2m;

TEST(Mixing, WorkedUpdate) {
  auto state = MixingState::initial({0.5, 0.5}, 0.5);
  state = update_mixing(state, ClassLossVector::all_valid({1.0, 3.0}));
  EXPECT_NEAR(state.alpha[0], 0.375, 1e-15);
  EXPECT_NEAR(state.alpha[1], 0.625, 1e-15);
  EXPECT_EQ(state.epoch, 1u);
}

TEST(Mixing, ZeroGammaIsFrozen) {
  const auto init = MixingState::initial({0.2, 0.3, 0.5}, 0.0);
  const auto next = update_mixing(init, ClassLossVector::all_valid({9.0, 1.0, 1.0}));
  EXPECT_EQ(next.alpha, init.alpha);
}

TEST(Mixing, ZeroTotalSkipsButAdvances) {
  const auto init = MixingState::initial({0.5, 0.5}, 0.3);
  const auto next = update_mixing(init, ClassLossVector::all_valid({0.0, 0.0}));
  EXPECT_EQ(next.alpha, init.alpha);
  EXPECT_EQ(next.epoch, 1u);
  EXPECT_FALSE(normalize_losses(ClassLossVector::all_valid({0.0, 0.0})).has_value());
}

TEST(Mixing, Errors) {
  EXPECT_THROW(MixingState::initial({0.5, 0.6}, 0.1), InvalidSize);
  EXPECT_THROW(MixingState::initial({0.5, 0.5}, 1.0), InvalidSize);
  const auto s = MixingState::initial({0.5, 0.5}, 0.1);
  EXPECT_THROW(update_mixing(s, ClassLossVector::all_valid({1.0})), DimensionMismatch);
  EXPECT_THROW(update_mixing(s, ClassLossVector::all_valid({-1.0, 2.0})), NegativeLoss);
  EXPECT_THROW(mixing_fixed_point(ClassLossVector::all_valid({0.0, 0.0})), ZeroTotalLoss);
}

TEST(Mixing, ConvergesToFixedPoint) {
  auto s = MixingState::initial({0.25, 0.25, 0.5}, 0.1);
  const auto lv = ClassLossVector::all_valid({0.2, 0.3, 0.5});
  for (int t = 0; t < 500; ++t) s = update_mixing(s, lv);
  const auto star = mixing_fixed_point(lv);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.alpha[i], star[i], 1e-15);
}

TEST(Apportion, Examples) {
  const std::vector<double> a{0.5, 0.3, 0.2};
  EXPECT_EQ(allocate_counts(a, 10).counts, (std::vector<std::size_t>{5, 3, 2}));
  const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  EXPECT_EQ(allocate_counts(third, 4).counts, (std::vector<std::size_t>{2, 1, 1}));
  const std::vector<double> tiny{0.999, 0.001};
  EXPECT_EQ(allocate_counts(tiny, 1).counts, (std::vector<std::size_t>{1, 0}));
}

TEST(Apportion, PropertiesOnRandomSimplices) {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<std::size_t> kdist(1, 8), mdist(1, 700);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto k = kdist(rng);
    std::vector<double> a(k);
    for (auto& x : a) x = expo(rng);
    const double total = std::accumulate(a.begin(), a.end(), 0.0);
    for (auto& x : a) x /= total;
    const auto m = mdist(rng);
    const auto plan = allocate_counts(a, m);
    EXPECT_EQ(std::accumulate(plan.counts.begin(), plan.counts.end(), std::size_t{0}), m);
    for (std::size_t i = 0; i < k; ++i) {
      // Largest remainder never strays a whole unit from the exact quota.
      EXPECT_LT(std::abs(static_cast<double>(plan.counts[i]) - a[i] * static_cast<double>(m)), 1.0 + 1e-9);
    }
  }
}
