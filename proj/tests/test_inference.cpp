#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hevt/inference.hpp"
#include "hevt/pipeline.hpp"

namespace {

// Standard normal CDF by composite Simpson quadrature of the density.
double normal_cdf(double z) {
  const std::size_t steps = 20000;
  const double h = z / static_cast<double>(steps);
  const auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
  double s = pdf(0.0) + pdf(z);
  for (std::size_t i = 1; i < steps; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * pdf(h * static_cast<double>(i));
  return 0.5 + s * h / 3.0;
}

// Root of normal_cdf(z) = level by bisection.
double quadrature_quantile(double level) {
  double lo = 0.0;
  double hi = 6.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(NormalQuantile, AgainstQuadrature) {
  EXPECT_EQ(hevt::normal_quantile(0.5), 0.0);
  for (double level : {0.75, 0.95, 0.975, 0.99}) {
    EXPECT_NEAR(hevt::normal_quantile(level), quadrature_quantile(level), 1e-8) << level;
  }
  EXPECT_NEAR(quadrature_quantile(0.975), 1.959964, 1e-5);
  EXPECT_NEAR(quadrature_quantile(0.95), 1.644854, 1e-5);
  EXPECT_NEAR(hevt::normal_quantile(0.25), -hevt::normal_quantile(0.75), 1e-15);
  EXPECT_THROW((void)hevt::normal_quantile(1.0), std::domain_error);
}

TEST(Sigma2Iid, HandValues) {
  EXPECT_EQ(hevt::sigma2_iid(0.0), 1.0);
  EXPECT_NEAR(hevt::sigma2_iid(-0.2), 2.5344 / 4.032, 1e-12);
  EXPECT_NEAR(hevt::sigma2_iid(-0.2), 0.6286, 1e-4);
  EXPECT_NEAR(hevt::sigma2_iid(-0.5), 0.525, 1e-12);
  EXPECT_THROW((void)hevt::sigma2_iid(0.25), std::domain_error);
}

hevt::TailFit example_fit() {
  hevt::TailFit f;
  f.k = 1000;
  f.threshold = 36.0;
  f.m1 = 0.02;
  f.m2 = 0.0006;
  f.v_n = 1.5;
  f.gamma = -0.48;
  f.endpoint = 38.25;
  f.scale = 1.08;
  return f;
}

TEST(StatisticScale, Formula) {
  const auto f = example_fit();
  EXPECT_NEAR(hevt::statistic_scale(f), (0.48 * 0.48 / 0.03 + 0.48) * std::sqrt(1000.0), 1e-9);
}

TEST(LowerConfidenceBound, MedianLevelCollapsesToEstimate) {
  const auto f = example_fit();
  const auto b = hevt::lower_confidence_bound(f, 0.0, 0.5);
  EXPECT_EQ(b.ucb_speed, f.endpoint);
  EXPECT_EQ(b.lcb_time, hevt::to_time(f.endpoint));
}

TEST(LowerConfidenceBound, MonotoneInLevelAndDelta) {
  const auto f = example_fit();
  double previous = hevt::to_time(f.endpoint);
  for (double level : {0.6, 0.75, 0.9, 0.95, 0.99}) {
    const auto b = hevt::lower_confidence_bound(f, 0.0, level);
    EXPECT_LT(b.lcb_time, previous);
    EXPECT_GT(b.ucb_time, hevt::to_time(f.endpoint));
    EXPECT_EQ(b.lcb_time, hevt::to_time(b.ucb_speed));
    previous = b.lcb_time;
  }
  const double z = hevt::normal_quantile(0.95);
  const double s = hevt::statistic_scale(f);
  const auto iid = hevt::lower_confidence_bound(f, 0.0, 0.95);
  const auto red = hevt::lower_confidence_bound(f, 0.35, 0.95);
  EXPECT_NEAR(red.ucb_speed, f.endpoint * std::exp(z * std::sqrt(hevt::sigma2_iid(-0.48) * 0.65) / s),
              1e-12);
  EXPECT_GT(red.lcb_time, iid.lcb_time);
  EXPECT_THROW((void)hevt::lower_confidence_bound(f, 1.0, 0.95), std::domain_error);
  EXPECT_THROW((void)hevt::lower_confidence_bound(f, 0.0, 0.4), std::domain_error);
}

TEST(LowerMedian, Cases) {
  EXPECT_EQ(hevt::lower_median({9.7, 9.5, 9.6}), 9.6);
  EXPECT_EQ(hevt::lower_median({3.0, 3.0, 3.0, 3.0}), 3.0);
  EXPECT_EQ(hevt::lower_median({4.0, 1.0, 3.0, 2.0}), 2.0);
  EXPECT_THROW((void)hevt::lower_median({}), std::invalid_argument);
}

TEST(KGrid, Bounds) {
  const auto g = hevt::k_grid(1000, 0.03, 0.07);
  EXPECT_EQ(g.front(), 30u);
  EXPECT_EQ(g.back(), 70u);
  EXPECT_EQ(g.size(), 41u);
  EXPECT_EQ(hevt::k_grid(1000, 0.03, 0.07, 10).size(), 5u);
}

TEST(SummarizeSweep, ConstantRowsGiveThatValue) {
  std::vector<hevt::InferenceResult> rows(5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].k = 10 + i;
    rows[i].endpoint_time = 9.55;
    rows[i].gamma = -0.2;
    rows[i].delta = 0.3;
    rows[i].bounds = {{0.95, 38.0, 9.47, 0.0, 0.0}};
  }
  const std::vector<double> levels{0.95};
  const auto s = hevt::summarize_sweep(rows, {}, levels);
  EXPECT_EQ(s.median_endpoint_time, 9.55);
  EXPECT_EQ(s.median_gamma, -0.2);
  EXPECT_EQ(s.median_lcb_time.at(0.95), 9.47);
  EXPECT_THROW((void)hevt::summarize_sweep({}, {1, 2}, levels), std::runtime_error);
}

class PowerTailPanel : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<double>> blocks(4000);
    for (auto& b : blocks) {
      b.resize(5);
      for (auto& x : b) x = 38.0 - 4.0 * std::pow(unif(rng), 1.0 / 3.0);
    }
    data = hevt::prepare_data(hevt::SpeedSample::from_groups(blocks));
  }
  hevt::PreparedData data;
};

TEST_F(PowerTailPanel, InferAtKComposesTheModules) {
  const std::size_t k = 1000;
  const auto r = hevt::infer_at_k(data.input(), k);
  const auto fit = hevt::fit_tail(data.ordered, k);
  EXPECT_EQ(r.fit.endpoint, fit.endpoint);
  EXPECT_EQ(r.endpoint_time, hevt::to_time(r.endpoint_speed));
  EXPECT_EQ(r.sigma2_iid, hevt::sigma2_iid(fit.gamma));
  const auto curve =
      hevt::heterogeneity_curve(data.lambda_sample, data.lambda_ranks, k, hevt::uniform_u_grid(1));
  EXPECT_EQ(r.variance_reduction.delta_raw, hevt::delta_hat(curve, fit.gamma).delta_raw);
  ASSERT_EQ(r.bounds.size(), 2u);
  EXPECT_EQ(r.bound(0.95).lcb_time, hevt::lower_confidence_bound(fit, r.delta, 0.95).lcb_time);
  EXPECT_LT(r.bound(0.95).lcb_time, r.bound(0.75).lcb_time);
  EXPECT_LE(r.bound(0.75).lcb_time, r.endpoint_time);
}

TEST_F(PowerTailPanel, SweepMedianNearTruth) {
  const auto s = hevt::sweep(data.input(), 0.03, 0.07, 25);
  EXPECT_FALSE(s.rows.empty());
  // true endpoint 38 km/h; standard error at k ~ 1000 is about 0.03 km/h
  EXPECT_NEAR(s.median_endpoint_time, hevt::to_time(38.0), 0.03);
  EXPECT_NEAR(s.median_gamma, -1.0 / 3.0, 0.1);
}

TEST_F(PowerTailPanel, ExtrapolationLine) {
  const auto fit = hevt::fit_tail(data.ordered, 500);
  const auto series = hevt::extrapolation_series(fit, data.ordered, 500);
  EXPECT_EQ(series.line(0.0), fit.endpoint);
  EXPECT_NEAR(series.line(1.0),
              fit.endpoint + fit.scale / fit.gamma * std::pow(500.0, fit.gamma), 1e-12);
  EXPECT_EQ(series.points.front().speed, data.ordered.from_top(0));
  EXPECT_EQ(series.points.front().transformed_rank, 1.0);
  EXPECT_LT(series.rms_deviation(), 0.05 * (series.points.front().speed - series.points.back().speed));
}

TEST(ExtrapolationSeries, RmsShrinksWithN) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double previous = 1e9;
  for (std::size_t n : {2000u, 20000u, 200000u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = 38.0 - 4.0 * std::pow(unif(rng), 1.0 / 3.0);
    const auto o = hevt::sort_ascending(v);
    const std::size_t k = n / 20;
    const auto series = hevt::extrapolation_series(hevt::fit_tail(o, k), o, k);
    EXPECT_LT(series.rms_deviation(), previous) << n;
    previous = series.rms_deviation();
  }
}

TEST(PrepareData, SingletonsDroppedOnlyForLambda) {
  const auto s = hevt::SpeedSample::from_groups({{30.0}, {31.0, 32.0}, {33.0, 34.0, 35.0}});
  hevt::Warnings w;
  const auto d = hevt::prepare_data(s, hevt::SingletonPolicy::drop, &w);
  EXPECT_EQ(d.ordered.n(), 6u);
  EXPECT_EQ(d.lambda_sample.n(), 5u);
  EXPECT_EQ(d.lambda_ranks, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
  const auto dup = hevt::prepare_data(s, hevt::SingletonPolicy::duplicate);
  EXPECT_EQ(dup.lambda_sample.n(), 7u);
  EXPECT_EQ(dup.lambda_ranks.size(), 7u);
  EXPECT_EQ(hevt::k_from_fraction(1000, 0.05), 50u);
  EXPECT_EQ(hevt::k_from_fraction(10, 0.001), 1u);
}

}  // namespace
