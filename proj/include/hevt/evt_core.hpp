#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hevt/errors.hpp"
#include "json.hpp"

namespace hevt {

/// Order statistics of a sample together with the ascending rank of every
/// original observation.
struct OrderedSample {
  std::vector<double> sorted;       // X_{1,n} <= ... <= X_{n,n}
  std::vector<std::size_t> ranks;   // ranks[i] in 1..n is the rank of values[i]

  [[nodiscard]] std::size_t n() const noexcept { return sorted.size(); }
  /// X_{n-i,n}: i = 0 is the maximum.
  [[nodiscard]] double from_top(std::size_t i) const { return sorted[sorted.size() - 1 - i]; }
};

enum class TieHandling {
  reject,       // equal values are an error (continuity of F_n)
  by_position,  // equal values ranked by position, earlier first
};

OrderedSample sort_ascending(std::span<const double> values,
                             TieHandling ties = TieHandling::reject);

struct LogMoments {
  double m1 = 0.0;
  double m2 = 0.0;
};

/// M^(r) = (1/k) sum_{i<k} (log X_{n-i,n} - log X_{n-k,n})^r for r = 1, 2.
LogMoments log_moments(const OrderedSample& ordered, std::size_t k);

struct MomentGamma {
  double v_n = 0.0;
  double gamma = 0.0;
};

/// V_n = 1/2 (1 - m1^2/m2)^-1 and the moment estimator gamma = m1 + 1 - V_n.
/// Throws DegenerateSpacingsError when m2 <= m1^2.
MomentGamma moment_gamma(double m1, double m2);

/// x* = threshold (1 - m1 V_n / gamma). Throws NoFiniteEndpointError for gamma >= 0.
[[nodiscard]] double endpoint(double threshold, double m1, double v_n, double gamma);

/// Scale a_{n/k} = threshold m1 V_n, so that x* = threshold - a / gamma.
[[nodiscard]] double scale(double threshold, double m1, double v_n);

struct TailFit {
  std::size_t k = 0;
  double threshold = 0.0;  // X_{n-k,n}
  double m1 = 0.0;
  double m2 = 0.0;
  double v_n = 0.0;
  double gamma = 0.0;
  double endpoint = 0.0;   // +inf when gamma >= 0
  double scale = 0.0;

  [[nodiscard]] bool has_finite_endpoint() const noexcept { return gamma < 0.0; }
};

/// All tail statistics at one k. Degenerate spacings propagate as errors; a
/// non-negative gamma yields an infinite endpoint instead of throwing.
TailFit fit_tail(const OrderedSample& ordered, std::size_t k);

void to_json(nlohmann::json& j, const TailFit& fit);

}  // namespace hevt
