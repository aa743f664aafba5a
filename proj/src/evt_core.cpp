#include "hevt/evt_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hevt/errors.hpp"

namespace hevt {

OrderedSample sort_ascending(std::span<const double> values, TieHandling ties) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  OrderedSample out;
  out.sorted.resize(n);
  out.ranks.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    out.sorted[r] = values[order[r]];
    out.ranks[order[r]] = r + 1;
    if (ties == TieHandling::reject && r > 0 && out.sorted[r] == out.sorted[r - 1]) {
      throw std::invalid_argument("sort_ascending: duplicate value " +
                                  std::to_string(out.sorted[r]) +
                                  " (sample must be strictly distinct)");
    }
  }
  return out;
}

LogMoments log_moments(const OrderedSample& ordered, std::size_t k) {
  const std::size_t n = ordered.n();
  if (k < 1 || k >= n) {
    throw std::out_of_range("log_moments: k = " + std::to_string(k) + " outside [1, n-1] for n = " +
                            std::to_string(n));
  }
  const double threshold = ordered.from_top(k);
  if (!(threshold > 0.0)) throw std::domain_error("log_moments: values must be positive");
  const double log_threshold = std::log(threshold);
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = std::log(ordered.from_top(i)) - log_threshold;
    s1 += d;
    s2 += d * d;
  }
  const auto kd = static_cast<double>(k);
  return {s1 / kd, s2 / kd};
}

MomentGamma moment_gamma(double m1, double m2) {
  if (!(m2 > m1 * m1)) {
    throw DegenerateSpacingsError("moment_gamma: M2 <= M1^2 (degenerate log-spacings)");
  }
  const double v_n = 0.5 / (1.0 - m1 * m1 / m2);
  return {v_n, m1 + 1.0 - v_n};
}

double endpoint(double threshold, double m1, double v_n, double gamma) {
  if (!(gamma < 0.0)) {
    throw NoFiniteEndpointError("endpoint: gamma = " + std::to_string(gamma) +
                                " >= 0, no finite endpoint");
  }
  return threshold * (1.0 - m1 * v_n / gamma);
}

double scale(double threshold, double m1, double v_n) {
  if (!(m1 > 0.0) || !(v_n > 0.0)) {
    throw std::domain_error("scale: M1 and V_n must be positive");
  }
  return threshold * m1 * v_n;
}

TailFit fit_tail(const OrderedSample& ordered, std::size_t k) {
  TailFit fit;
  fit.k = k;
  const auto [m1, m2] = log_moments(ordered, k);
  fit.threshold = ordered.from_top(k);
  fit.m1 = m1;
  fit.m2 = m2;
  const auto [v_n, gamma] = moment_gamma(m1, m2);
  fit.v_n = v_n;
  fit.gamma = gamma;
  fit.scale = scale(fit.threshold, m1, v_n);
  fit.endpoint = fit.has_finite_endpoint() ? endpoint(fit.threshold, m1, v_n, gamma)
                                           : std::numeric_limits<double>::infinity();
  return fit;
}

void to_json(nlohmann::json& j, const TailFit& fit) {
  j = nlohmann::json{{"k", fit.k},         {"threshold", fit.threshold}, {"m1", fit.m1},
                     {"m2", fit.m2},       {"v_n", fit.v_n},             {"gamma", fit.gamma},
                     {"scale", fit.scale}};
  // JSON has no infinity.
  j["endpoint"] = std::isfinite(fit.endpoint) ? nlohmann::json(fit.endpoint) : nlohmann::json();
}

}  // namespace hevt
