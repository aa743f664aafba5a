#include "hevt/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "hevt/csv.hpp"

namespace hevt {

double sigma2_iid(double gamma) {
  const double g = gamma;
  const double denom = (1.0 - 2.0 * g) * (1.0 - 3.0 * g) * (1.0 - 4.0 * g);
  if (!(g < 0.25) || !(denom > 0.0)) {
    throw std::domain_error("sigma2_iid: gamma must be below 1/4");
  }
  return (1.0 - g) * (1.0 - g) * (1.0 - 3.0 * g + 4.0 * g * g) / denom;
}

double normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::domain_error("normal_quantile: level must lie in (0, 1)");
  }
  if (level == 0.5) return 0.0;
  return boost::math::quantile(boost::math::normal_distribution<double>(), level);
}

double statistic_scale(const TailFit& fit) {
  return (fit.gamma * fit.gamma / (fit.m1 * fit.v_n) - fit.gamma) *
         std::sqrt(static_cast<double>(fit.k));
}

ConfidenceBound lower_confidence_bound(const TailFit& fit, double delta, double level,
                                       double distance_m) {
  if (!fit.has_finite_endpoint()) {
    throw NoFiniteEndpointError("lower_confidence_bound: gamma >= 0");
  }
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::domain_error("lower_confidence_bound: delta must lie in [0, 1)");
  }
  if (!(level >= 0.5 && level < 1.0)) {
    throw std::domain_error("lower_confidence_bound: level must lie in [0.5, 1)");
  }
  if (fit.k < 1) throw std::domain_error("lower_confidence_bound: k must be positive");
  const double z = normal_quantile(level);
  const double sd = std::sqrt(sigma2_iid(fit.gamma) * (1.0 - delta)) / statistic_scale(fit);
  ConfidenceBound b;
  b.level = level;
  b.ucb_speed = fit.endpoint * std::exp(z * sd);
  b.lcb_speed = fit.endpoint * std::exp(-z * sd);
  b.lcb_time = to_time(b.ucb_speed, distance_m);
  b.ucb_time = to_time(b.lcb_speed, distance_m);
  return b;
}

const ConfidenceBound& InferenceResult::bound(double level) const {
  for (const auto& b : bounds) {
    if (b.level == level) return b;
  }
  throw std::out_of_range("InferenceResult: no bound at level " + format_double(level));
}

InferenceResult infer_at_k(const EstimationInput& input, std::size_t k,
                           const InferenceOptions& options, Warnings* warnings) {
  if (input.ordered == nullptr || input.lambda_sample == nullptr) {
    throw std::invalid_argument("infer_at_k: incomplete estimation input");
  }
  InferenceResult r;
  r.k = k;
  r.fit = fit_tail(*input.ordered, k);
  if (!r.fit.has_finite_endpoint()) {
    throw NoFiniteEndpointError("k = " + std::to_string(k) + ": gamma-hat = " +
                                format_double(r.fit.gamma) + " >= 0, no finite endpoint");
  }
  r.gamma = r.fit.gamma;
  r.endpoint_speed = r.fit.endpoint;
  r.endpoint_time = to_time(r.endpoint_speed, options.distance_m);
  r.sigma2_iid = sigma2_iid(r.gamma);
  r.stat_scale = statistic_scale(r.fit);

  if (!options.ignore_heterogeneity) {
    const std::size_t k_lambda = options.k_lambda.value_or(k);
    const auto curve =
        heterogeneity_curve(*input.lambda_sample, input.lambda_ranks, k_lambda, {});
    r.variance_reduction = delta_hat(curve, r.gamma, options.m_lambda, warnings);
  }
  r.delta = r.variance_reduction.delta;

  for (double level : options.levels) {
    r.bounds.push_back(lower_confidence_bound(r.fit, r.delta, level, options.distance_m));
  }
  return r;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("lower_median: no values");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

std::vector<std::size_t> k_grid(std::size_t n, double k_min_frac, double k_max_frac,
                                std::size_t step) {
  if (!(k_min_frac > 0.0 && k_min_frac < k_max_frac && k_max_frac < 1.0)) {
    throw std::invalid_argument("k_grid: need 0 < k_min_frac < k_max_frac < 1");
  }
  if (step == 0) throw std::invalid_argument("k_grid: step must be positive");
  const auto nd = static_cast<double>(n);
  const auto lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(k_min_frac * nd)));
  const auto hi = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::floor(k_max_frac * nd)));
  std::vector<std::size_t> grid;
  for (std::size_t k = lo; k <= hi; k += step) grid.push_back(k);
  return grid;
}

SweepResult summarize_sweep(std::vector<InferenceResult> rows, std::vector<std::size_t> excluded_k,
                            std::span<const double> levels) {
  if (rows.empty()) {
    throw std::runtime_error("sweep: every k in the range was excluded (no finite endpoint)");
  }
  SweepResult result;
  std::vector<double> endpoints;
  std::vector<double> gammas;
  std::vector<double> deltas;
  for (const auto& r : rows) {
    endpoints.push_back(r.endpoint_time);
    gammas.push_back(r.gamma);
    deltas.push_back(r.delta);
  }
  result.median_endpoint_time = lower_median(endpoints);
  result.median_gamma = lower_median(gammas);
  result.median_delta = lower_median(deltas);
  for (double level : levels) {
    std::vector<double> lcbs;
    for (const auto& r : rows) lcbs.push_back(r.bound(level).lcb_time);
    result.median_lcb_time[level] = lower_median(std::move(lcbs));
  }
  result.rows = std::move(rows);
  result.excluded_k = std::move(excluded_k);
  return result;
}

SweepResult sweep(const EstimationInput& input, double k_min_frac, double k_max_frac,
                  std::size_t step, const InferenceOptions& options, Warnings* warnings) {
  std::vector<InferenceResult> rows;
  std::vector<std::size_t> excluded;
  for (std::size_t k : k_grid(input.ordered->n(), k_min_frac, k_max_frac, step)) {
    try {
      rows.push_back(infer_at_k(input, k, options, warnings));
    } catch (const NoFiniteEndpointError&) {
      excluded.push_back(k);
    }
  }
  if (!excluded.empty()) {
    warn(warnings, std::to_string(excluded.size()) +
                       " k value(s) excluded from the sweep: gamma-hat >= 0");
  }
  return summarize_sweep(std::move(rows), std::move(excluded), options.levels);
}

double ExtrapolationSeries::rms_deviation() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& pt : points) {
    if (pt.rank > k) break;
    const double d = pt.speed - line(pt.transformed_rank);
    sum += d * d;
    ++count;
  }
  return count == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(count));
}

ExtrapolationSeries extrapolation_series(const TailFit& fit, const OrderedSample& ordered,
                                         std::size_t max_rank) {
  if (!fit.has_finite_endpoint()) throw NoFiniteEndpointError("extrapolation_series: gamma >= 0");
  if (max_rank < 1 || max_rank > ordered.n()) {
    throw std::out_of_range("extrapolation_series: max_rank outside [1, n]");
  }
  ExtrapolationSeries s;
  s.gamma = fit.gamma;
  s.k = fit.k;
  s.intercept = fit.endpoint;
  s.slope = fit.scale / fit.gamma * std::pow(static_cast<double>(fit.k), fit.gamma);
  s.points.reserve(max_rank);
  for (std::size_t r = 1; r <= max_rank; ++r) {
    s.points.push_back({r, std::pow(static_cast<double>(r), -fit.gamma), ordered.from_top(r - 1)});
  }
  return s;
}

void to_json(nlohmann::json& j, const ConfidenceBound& b) {
  j = nlohmann::json{{"level", b.level},
                     {"ucb_speed", b.ucb_speed},
                     {"lcb_time", b.lcb_time},
                     {"lcb_speed", b.lcb_speed},
                     {"ucb_time", b.ucb_time}};
}

void to_json(nlohmann::json& j, const InferenceResult& r) {
  j = nlohmann::json{{"k", r.k},
                     {"gamma", r.gamma},
                     {"endpoint_speed", r.endpoint_speed},
                     {"endpoint_time", r.endpoint_time},
                     {"sigma2_iid", r.sigma2_iid},
                     {"delta", r.delta},
                     {"stat_scale", r.stat_scale},
                     {"tail_fit", r.fit},
                     {"variance_reduction", r.variance_reduction},
                     {"bounds", r.bounds}};
}

}  // namespace hevt
