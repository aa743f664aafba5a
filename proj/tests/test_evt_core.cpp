#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hevt/evt_core.hpp"

namespace {

using hevt::OrderedSample;

TEST(SortAscending, Ranks) {
  const std::vector<double> a{3.0, 1.0, 2.0};
  EXPECT_EQ(hevt::sort_ascending(a).ranks, (std::vector<std::size_t>{3, 1, 2}));
  const std::vector<double> b{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(hevt::sort_ascending(b).ranks, (std::vector<std::size_t>{1, 2, 3, 4}));
  const std::vector<double> c{5.0, 4.0, 3.0, 2.0, 1.0};
  const auto oc = hevt::sort_ascending(c);
  EXPECT_EQ(oc.ranks, (std::vector<std::size_t>{5, 4, 3, 2, 1}));
  EXPECT_EQ(oc.sorted, (std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0}));
  EXPECT_EQ(oc.from_top(0), 5.0);
}

TEST(SortAscending, Ties) {
  const std::vector<double> v{2.0, 1.0, 2.0};
  EXPECT_THROW((void)hevt::sort_ascending(v), std::invalid_argument);
  EXPECT_EQ(hevt::sort_ascending(v, hevt::TieHandling::by_position).ranks,
            (std::vector<std::size_t>{2, 1, 3}));
}

TEST(SortAscending, RanksArePermutationInvariantOfSortedValues) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(1.0, 2.0);
  std::vector<double> v(200);
  for (auto& x : v) x = d(rng);
  const auto o = hevt::sort_ascending(v);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(o.sorted[o.ranks[i] - 1], v[i]);
}

TEST(LogMoments, HandComputedSpacings) {
  const std::vector<double> v{std::exp(0.2), 0.5, std::exp(0.0), std::exp(0.1)};
  const auto o = hevt::sort_ascending(v);
  const auto m = hevt::log_moments(o, 2);
  EXPECT_NEAR(m.m1, 0.15, 1e-15);
  EXPECT_NEAR(m.m2, 0.025, 1e-15);
}

TEST(LogMoments, KOneAndScaleInvariance) {
  const std::vector<double> v{1.0, 1.3, 1.7, 2.2, 2.3};
  const auto o = hevt::sort_ascending(v);
  const auto m = hevt::log_moments(o, 1);
  EXPECT_DOUBLE_EQ(m.m1, std::log(2.3 / 2.2));
  EXPECT_DOUBLE_EQ(m.m2, m.m1 * m.m1);

  std::vector<double> scaled = v;
  for (auto& x : scaled) x *= 37.5;
  const auto a = hevt::log_moments(o, 3);
  const auto b = hevt::log_moments(hevt::sort_ascending(scaled), 3);
  EXPECT_NEAR(a.m1, b.m1, 1e-14);
  EXPECT_NEAR(a.m2, b.m2, 1e-14);
  EXPECT_THROW((void)hevt::log_moments(o, 0), std::out_of_range);
  EXPECT_THROW((void)hevt::log_moments(o, 5), std::out_of_range);
}

TEST(LogMoments, CauchySchwarz) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(30.0, 38.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(100);
    for (auto& x : v) x = d(rng);
    const auto o = hevt::sort_ascending(v);
    for (std::size_t k : {1u, 5u, 50u, 99u}) {
      const auto m = hevt::log_moments(o, k);
      EXPECT_GE(m.m1, 0.0);
      EXPECT_GE(m.m2, m.m1 * m.m1 * (1.0 - 1e-12));
    }
  }
}

TEST(MomentGamma, HandVectors) {
  const auto a = hevt::moment_gamma(0.15, 0.025);
  EXPECT_NEAR(a.v_n, 5.0, 1e-12);
  EXPECT_NEAR(a.gamma, -3.85, 1e-12);
  const auto b = hevt::moment_gamma(0.02, 0.0006);
  EXPECT_NEAR(b.v_n, 1.5, 1e-12);
  EXPECT_NEAR(b.gamma, -0.48, 1e-12);
  const auto c = hevt::moment_gamma(0.3, 2 * 0.09);
  EXPECT_NEAR(c.v_n, 1.0, 1e-12);
  EXPECT_NEAR(c.gamma, 0.3, 1e-12);
  EXPECT_THROW((void)hevt::moment_gamma(0.1, 0.01), hevt::DegenerateSpacingsError);
}

TEST(Endpoint, HandVectorsAndLimits) {
  EXPECT_NEAR(hevt::endpoint(36.0, 0.02, 1.5, -0.48), 38.25, 1e-12);
  EXPECT_NEAR(hevt::scale(36.0, 0.02, 1.5), 1.08, 1e-12);
  EXPECT_NEAR(36.0 - hevt::scale(36.0, 0.02, 1.5) / -0.48, hevt::endpoint(36.0, 0.02, 1.5, -0.48),
              1e-12);
  EXPECT_NEAR(hevt::endpoint(36.0, 1e-12, 1.5, -0.3), 36.0, 1e-9);
  EXPECT_NEAR(hevt::scale(72.0, 0.02, 1.5), 2.0 * hevt::scale(36.0, 0.02, 1.5), 1e-12);
  EXPECT_THROW((void)hevt::endpoint(36.0, 0.02, 1.5, 0.0), hevt::NoFiniteEndpointError);
  EXPECT_THROW((void)hevt::endpoint(36.0, 0.02, 1.5, 0.1), hevt::NoFiniteEndpointError);
}

TEST(FitTail, EndpointAboveThresholdOnBoundedData) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(50000);
  for (auto& x : v) x = 38.0 - 4.0 * std::pow(d(rng), 1.0 / 4.0);
  const auto o = hevt::sort_ascending(v);
  const std::size_t k = 1000;
  const auto fit = hevt::fit_tail(o, k);
  ASSERT_TRUE(fit.has_finite_endpoint());
  EXPECT_GE(fit.endpoint, fit.threshold);
  EXPECT_EQ(fit.threshold, o.from_top(k));
  EXPECT_NEAR(fit.endpoint, fit.threshold - fit.scale / fit.gamma, 1e-12);
  // Plug-in standard error of log x* at the true gamma.
  const double g = -0.25;
  const double var = (1 - g) * (1 - g) * (1 - 3 * g + 4 * g * g) / ((1 - 2 * g) * (1 - 3 * g) * (1 - 4 * g));
  const double se = std::sqrt(var) / ((g * g / (fit.m1 * fit.v_n) - g) * std::sqrt(double(k)));
  EXPECT_NEAR(std::log(fit.endpoint), std::log(38.0), 3.0 * se);
  EXPECT_NEAR(fit.gamma, g, 0.15);
}

TEST(FitTail, HeavyTailHasNoFiniteEndpoint) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(5000);
  for (auto& x : v) x = std::pow(1.0 - d(rng), -0.5);
  const auto fit = hevt::fit_tail(hevt::sort_ascending(v), 250);
  EXPECT_FALSE(fit.has_finite_endpoint());
  EXPECT_TRUE(std::isinf(fit.endpoint));
  EXPECT_TRUE(nlohmann::json(fit)["endpoint"].is_null());
}

}  // namespace
