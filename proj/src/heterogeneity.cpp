#include "hevt/heterogeneity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hevt/csv.hpp"

namespace hevt {

namespace {

void check_inputs(const SpeedSample& sample, std::span<const std::size_t> ranks, std::size_t k) {
  const std::size_t n = sample.n();
  if (ranks.size() != n) throw std::invalid_argument("heterogeneity: ranks size differs from n");
  if (k < 1 || k >= n) {
    throw std::out_of_range("heterogeneity: k = " + std::to_string(k) + " outside [1, n-1]");
  }
  if (sample.min_group_size() < 2) {
    throw std::invalid_argument(
        "heterogeneity: every athlete needs at least two records; apply prepare_for_lambda "
        "first");
  }
}

// sum_l (c_a c_b - min(c_a, c_b)) / (m_l - 1), where c_a, c_b count the
// athlete's ranks among the top ta and tb. The two sets are nested, so their
// intersection has min(c_a, c_b) elements and the ordered pairs j1 != j2
// number c_a c_b - min(c_a, c_b).
double ordered_pair_sum(const SpeedSample& sample, std::span<const std::size_t> ranks,
                        std::size_t ta, std::size_t tb) {
  const std::size_t n = sample.n();
  double total = 0.0;
  for (std::size_t l = 0; l < sample.p(); ++l) {
    const std::size_t begin = sample.group_offsets[l];
    const std::size_t m = sample.group_sizes[l];
    std::size_t ca = 0;
    std::size_t cb = 0;
    for (std::size_t i = begin; i < begin + m; ++i) {
      if (ranks[i] + ta > n) ++ca;
      if (ranks[i] + tb > n) ++cb;
    }
    const std::size_t pairs = ca * cb - std::min(ca, cb);
    if (pairs != 0) total += static_cast<double>(pairs) / static_cast<double>(m - 1);
  }
  return total;
}

}  // namespace

std::size_t tail_count(std::size_t n, double s) {
  if (std::isnan(s)) throw std::domain_error("tail_count: NaN cut");
  if (s <= 0.0) return 0;
  if (s >= static_cast<double>(n)) return n;
  const double nearest = std::round(s);
  if (std::abs(s - nearest) <= 1e-9 * std::max(1.0, s)) s = nearest;
  return std::min(n, static_cast<std::size_t>(std::ceil(s)));
}

double HeterogeneityCurve::evaluate(double u) const {
  if (!has_step_form()) throw std::logic_error("HeterogeneityCurve::evaluate: no step form");
  if (!(u > 0.0) || u > 1.0) throw std::domain_error("HeterogeneityCurve::evaluate: u outside (0, 1]");
  const std::size_t c = std::max(k, tail_count(n, static_cast<double>(k) / u));
  return by_tail_count[c - k];
}

HeterogeneityCurve HeterogeneityCurve::from_values(std::vector<double> u_grid,
                                                   std::vector<double> values) {
  if (u_grid.empty() || u_grid.size() != values.size()) {
    throw std::invalid_argument("from_values: grid and values must be non-empty and equal length");
  }
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (!(u_grid[i] > 0.0) || u_grid[i] > 1.0 || (i > 0 && !(u_grid[i] > u_grid[i - 1]))) {
      throw std::invalid_argument("from_values: grid must be strictly ascending in (0, 1]");
    }
  }
  HeterogeneityCurve curve;
  curve.lambda_at_1 = u_grid.back() == 1.0 ? values.back() : 0.0;
  curve.u_grid = std::move(u_grid);
  curve.lambda_hat = std::move(values);
  return curve;
}

std::vector<double> uniform_u_grid(std::size_t points) {
  if (points == 0) throw std::invalid_argument("uniform_u_grid: need at least one point");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = static_cast<double>(i + 1) / static_cast<double>(points);
  }
  return grid;
}

double lambda_hat(const SpeedSample& sample, std::span<const std::size_t> ranks, std::size_t k,
                  double u) {
  check_inputs(sample, ranks, k);
  if (!(u > 0.0)) throw std::domain_error("lambda_hat: u must be positive");
  const auto kd = static_cast<double>(k);
  const std::size_t n = sample.n();
  return ordered_pair_sum(sample, ranks, tail_count(n, kd), tail_count(n, kd / u)) / kd;
}

double r_hat(const SpeedSample& sample, std::span<const std::size_t> ranks, std::size_t k,
             double x, double y) {
  check_inputs(sample, ranks, k);
  if (!(x > 0.0) || !(y > 0.0)) throw std::domain_error("r_hat: x and y must be positive");
  const auto kd = static_cast<double>(k);
  const std::size_t n = sample.n();
  return ordered_pair_sum(sample, ranks, tail_count(n, kd * x), tail_count(n, kd * y)) / kd;
}

std::vector<double> r_hat_surface(const SpeedSample& sample, std::span<const std::size_t> ranks,
                                  std::size_t k, std::span<const double> xs,
                                  std::span<const double> ys) {
  check_inputs(sample, ranks, k);
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();
  const auto kd = static_cast<double>(k);

  // counts[g * p + l]: athlete l's ranks among the top tail_count(k * grid[g]).
  const auto athlete_counts = [&](std::span<const double> grid) {
    std::vector<std::size_t> counts(grid.size() * p, 0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (!(grid[g] > 0.0)) throw std::domain_error("r_hat_surface: grid values must be positive");
      const std::size_t t = tail_count(n, kd * grid[g]);
      for (std::size_t l = 0; l < p; ++l) {
        const std::size_t begin = sample.group_offsets[l];
        std::size_t c = 0;
        for (std::size_t i = begin; i < begin + sample.group_sizes[l]; ++i) {
          if (ranks[i] + t > n) ++c;
        }
        counts[g * p + l] = c;
      }
    }
    return counts;
  };
  const auto cx = athlete_counts(xs);
  const auto cy = athlete_counts(ys);

  std::vector<double> surface(xs.size() * ys.size(), 0.0);
  for (std::size_t a = 0; a < xs.size(); ++a) {
    for (std::size_t b = 0; b < ys.size(); ++b) {
      double total = 0.0;
      for (std::size_t l = 0; l < p; ++l) {
        const std::size_t ca = cx[a * p + l];
        const std::size_t cb = cy[b * p + l];
        const std::size_t pairs = ca * cb - std::min(ca, cb);
        if (pairs != 0) {
          total += static_cast<double>(pairs) / static_cast<double>(sample.group_sizes[l] - 1);
        }
      }
      surface[a * ys.size() + b] = total / kd;
    }
  }
  return surface;
}

HeterogeneityCurve heterogeneity_curve(const SpeedSample& sample,
                                       std::span<const std::size_t> ranks, std::size_t k,
                                       std::span<const double> u_grid) {
  check_inputs(sample, ranks, k);
  const std::size_t n = sample.n();
  const std::size_t p = sample.p();

  std::vector<std::size_t> athlete_of(n);
  std::vector<std::size_t> position_of_rank(n);
  for (std::size_t l = 0; l < p; ++l) {
    for (std::size_t j = 0; j < sample.group_sizes[l]; ++j) {
      athlete_of[sample.group_offsets[l] + j] = l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) position_of_rank[ranks[i] - 1] = i;

  std::vector<std::size_t> in_top_k(p, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (ranks[i] + k > n) ++in_top_k[athlete_of[i]];
  }

  // With c = k both cuts coincide: c_a (c_a - 1) ordered pairs per athlete.
  // Each further rank admitted by the second cut lies outside the top k and
  // adds c_a pairs to its athlete.
  double running = 0.0;
  for (std::size_t l = 0; l < p; ++l) {
    const auto ca = static_cast<double>(in_top_k[l]);
    running += ca * (ca - 1.0) / static_cast<double>(sample.group_sizes[l] - 1);
  }
  const auto kd = static_cast<double>(k);
  HeterogeneityCurve curve;
  curve.k = k;
  curve.n = n;
  curve.p = p;
  curve.by_tail_count.resize(n - k + 1);
  curve.by_tail_count[0] = running / kd;
  for (std::size_t c = k + 1; c <= n; ++c) {
    const std::size_t l = athlete_of[position_of_rank[n - c]];
    running += static_cast<double>(in_top_k[l]) / static_cast<double>(sample.group_sizes[l] - 1);
    curve.by_tail_count[c - k] = running / kd;
  }

  curve.lambda_at_1 = lambda_hat(sample, ranks, k, 1.0);
  curve.u_grid.assign(u_grid.begin(), u_grid.end());
  curve.lambda_hat.reserve(u_grid.size());
  for (double u : u_grid) {
    curve.lambda_hat.push_back(u <= 1.0 ? curve.evaluate(u) : lambda_hat(sample, ranks, k, u));
  }
  return curve;
}

double homogeneous_reference(std::size_t n, std::size_t k, double u) {
  if (n < 2 || k < 1) throw std::invalid_argument("homogeneous_reference: need n >= 2, k >= 1");
  if (!(u > 0.0)) throw std::domain_error("homogeneous_reference: u must be positive");
  // ceil(k/u) with the same snapping as the estimator, without the cap at n.
  double s = static_cast<double>(k) / u;
  const double nearest = std::round(s);
  if (std::abs(s - nearest) <= 1e-9 * std::max(1.0, s)) s = nearest;
  const double c = std::ceil(s);
  return std::min((c - 1.0) / static_cast<double>(n - 1), 1.0);
}

namespace {

double integrate_nodes(std::span<const double> u, std::span<const double> lambda, double x) {
  const double e = 1.0 + x;
  double total = lambda.front() * std::pow(u.front(), e);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double a = u[i];
    const double b = u[i + 1];
    const double slope = (lambda[i + 1] - lambda[i]) / (b - a);
    total += (lambda[i] - slope * a) * (std::pow(b, e) - std::pow(a, e)) +
             slope * e / (e + 1.0) * (std::pow(b, e + 1.0) - std::pow(a, e + 1.0));
  }
  if (u.back() < 1.0) total += lambda.back() * (1.0 - std::pow(u.back(), e));
  return total;
}

}  // namespace

double m_lambda(const HeterogeneityCurve& curve, double x, const MLambdaOptions& options) {
  if (!(x > -1.0)) throw std::domain_error("m_lambda: x must exceed -1, got " + format_double(x));
  const double e = 1.0 + x;

  if (curve.has_step_form() && options.method == MLambdaOptions::Method::exact) {
    // lambda equals by_tail_count[c - k] for u in [k/c, k/(c-1)), and the
    // capped value c = n on (0, k/(n-1)).
    const std::size_t n = curve.n;
    const std::size_t k = curve.k;
    const auto kd = static_cast<double>(k);
    double total = 0.0;
    double upper = 1.0;
    for (std::size_t c = k + 1; c < n; ++c) {
      const double lower = std::pow(kd / static_cast<double>(c), e);
      total += curve.by_tail_count[c - k] * (upper - lower);
      upper = lower;
    }
    total += curve.by_tail_count[n - k] * upper;
    return total;
  }

  if (curve.has_step_form()) {
    const auto grid = uniform_u_grid(options.grid_points);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = curve.evaluate(grid[i]);
    return integrate_nodes(grid, values, x);
  }

  // Tabulated curve: use the nodes in (0, 1].
  std::vector<double> u;
  std::vector<double> lambda;
  for (std::size_t i = 0; i < curve.u_grid.size(); ++i) {
    if (curve.u_grid[i] <= 1.0) {
      u.push_back(curve.u_grid[i]);
      lambda.push_back(curve.lambda_hat[i]);
    }
  }
  if (u.empty()) throw std::invalid_argument("m_lambda: curve has no nodes in (0, 1]");
  return integrate_nodes(u, lambda, x);
}

Weights weights(double gamma) {
  const double g = gamma;
  const double denom = 1.0 - 3.0 * g + 4.0 * g * g;
  return {(1.0 - 2.0 * g) * (1.0 - 3.0 * g) * (1.0 - 4.0 * g) / denom,
          -2.0 * g * (1.0 - g) * (1.0 - 4.0 * g) / denom,
          8.0 * g * (1.0 - 2.0 * g) * (1.0 - 2.0 * g) / denom};
}

VarianceReduction delta_hat(const HeterogeneityCurve& curve, double gamma,
                            const MLambdaOptions& options, Warnings* warnings) {
  if (!(gamma < 0.5)) {
    throw std::domain_error("delta_hat: gamma must be below 1/2 so that m(-2 gamma) exists");
  }
  VarianceReduction vr;
  vr.weights = weights(gamma);
  vr.lambda_at_1 = curve.lambda_at_1;
  vr.m_neg_gamma = m_lambda(curve, -gamma, options);
  vr.m_neg_2gamma = m_lambda(curve, -2.0 * gamma, options);
  vr.delta_raw = vr.weights.w0 * vr.lambda_at_1 + vr.weights.w1 * vr.m_neg_gamma +
                 vr.weights.w2 * vr.m_neg_2gamma;
  if (std::isnan(vr.delta_raw)) throw std::domain_error("delta_hat: NaN variance reduction");
  vr.delta = std::clamp(vr.delta_raw, 0.0, max_delta);
  vr.clamped = vr.delta != vr.delta_raw;
  if (vr.clamped) {
    warn(warnings, "k = " + std::to_string(curve.k) + ": variance reduction " +
                       format_double(vr.delta_raw) + " clamped to " + format_double(vr.delta));
  }
  return vr;
}

void to_json(nlohmann::json& j, const VarianceReduction& vr) {
  j = nlohmann::json{{"delta", vr.delta},
                     {"delta_raw", vr.delta_raw},
                     {"clamped", vr.clamped},
                     {"w0", vr.weights.w0},
                     {"w1", vr.weights.w1},
                     {"w2", vr.weights.w2},
                     {"lambda_at_1", vr.lambda_at_1},
                     {"m_neg_gamma", vr.m_neg_gamma},
                     {"m_neg_2gamma", vr.m_neg_2gamma}};
}

}  // namespace hevt
