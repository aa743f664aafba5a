#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hevt/errors.hpp"
#include "hevt/evt_core.hpp"
#include "hevt/heterogeneity.hpp"
#include "hevt/ingest.hpp"
#include "json.hpp"

namespace hevt {

/// Asymptotic variance of the endpoint statistic for i.i.d. data.
[[nodiscard]] double sigma2_iid(double gamma);

/// Standard normal quantile; level in (0, 1).
[[nodiscard]] double normal_quantile(double level);

/// S = (gamma^2 / (M1 V_n) - gamma) sqrt(k).
[[nodiscard]] double statistic_scale(const TailFit& fit);

struct ConfidenceBound {
  double level = 0.0;
  double ucb_speed = 0.0;  // upper bound on the speed endpoint
  double lcb_time = 0.0;   // matching lower bound on the ultimate time
  double lcb_speed = 0.0;  // companion lower bound on the speed endpoint
  double ucb_time = 0.0;   // companion upper bound on the ultimate time
};

/// One-sided bound at `level` in [0.5, 1): the speed endpoint is bounded
/// above by x* exp(z sqrt(sigma2_iid (1 - delta)) / S).
ConfidenceBound lower_confidence_bound(const TailFit& fit, double delta, double level,
                                       double distance_m = 100.0);

struct InferenceOptions {
  std::vector<double> levels{0.75, 0.95};
  double distance_m = 100.0;
  // k for the heterogeneity curve; defaults to the tail-fit k.
  std::optional<std::size_t> k_lambda;
  MLambdaOptions m_lambda;
  // Report the i.i.d. bound (Delta = 0) regardless of the data.
  bool ignore_heterogeneity = false;
};

struct InferenceResult {
  std::size_t k = 0;
  TailFit fit;
  double gamma = 0.0;
  double endpoint_speed = 0.0;
  double endpoint_time = 0.0;
  double sigma2_iid = 0.0;
  double delta = 0.0;
  VarianceReduction variance_reduction;
  double stat_scale = 0.0;
  std::vector<ConfidenceBound> bounds;  // in the order of options.levels

  [[nodiscard]] const ConfidenceBound& bound(double level) const;
};

/// Everything a confidence bound at one k needs. `ordered` ranks the full
/// sample; `lambda_sample` / `lambda_ranks` are the singleton-free sample the
/// heterogeneity estimator runs on (often the same data).
struct EstimationInput {
  const OrderedSample* ordered = nullptr;
  const SpeedSample* lambda_sample = nullptr;
  std::span<const std::size_t> lambda_ranks;
};

/// Point estimate, variance reduction and bounds at one k. Throws
/// NoFiniteEndpointError when gamma-hat >= 0.
InferenceResult infer_at_k(const EstimationInput& input, std::size_t k,
                           const InferenceOptions& options = {}, Warnings* warnings = nullptr);

struct SweepResult {
  std::vector<InferenceResult> rows;
  std::vector<std::size_t> excluded_k;
  double median_endpoint_time = 0.0;
  double median_gamma = 0.0;
  double median_delta = 0.0;
  std::map<double, double> median_lcb_time;
};

/// Lower-middle element for even counts. Throws on empty input.
[[nodiscard]] double lower_median(std::vector<double> values);

/// Integer k from ceil(k_min_frac n) to floor(k_max_frac n), stepping by `step`.
std::vector<std::size_t> k_grid(std::size_t n, double k_min_frac, double k_max_frac,
                                std::size_t step = 1);

/// Summaries over rows with a finite endpoint; throws if none remains.
SweepResult summarize_sweep(std::vector<InferenceResult> rows, std::vector<std::size_t> excluded_k,
                            std::span<const double> levels);

SweepResult sweep(const EstimationInput& input, double k_min_frac, double k_max_frac,
                  std::size_t step, const InferenceOptions& options = {},
                  Warnings* warnings = nullptr);

struct ExtrapolationPoint {
  std::size_t rank = 0;  // 1 = fastest
  double transformed_rank = 0.0;
  double speed = 0.0;
};

/// Observed top speeds against rank^(-gamma) and the line
/// speed = slope * rank^(-gamma) + intercept with slope = (a / gamma) k^gamma
/// and intercept x*.
struct ExtrapolationSeries {
  std::vector<ExtrapolationPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double gamma = 0.0;
  std::size_t k = 0;

  [[nodiscard]] double line(double transformed_rank) const noexcept {
    return slope * transformed_rank + intercept;
  }
  /// Root mean square of speed - line over the points with rank <= k.
  [[nodiscard]] double rms_deviation() const;
};

ExtrapolationSeries extrapolation_series(const TailFit& fit, const OrderedSample& ordered,
                                         std::size_t max_rank);

void to_json(nlohmann::json& j, const ConfidenceBound& b);
void to_json(nlohmann::json& j, const InferenceResult& r);

}  // namespace hevt
