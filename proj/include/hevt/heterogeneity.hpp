#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hevt/errors.hpp"
#include "hevt/sample.hpp"
#include "json.hpp"

namespace hevt {

/// Number of ranks R in 1..n with R > n - s, for a real cut s = k * multiplier.
/// s is snapped to the nearest integer when within 1e-9 relative, so that
/// k/u and k*(1/u) agree whenever the exact quotient is an integer.
[[nodiscard]] std::size_t tail_count(std::size_t n, double s);

/// Estimated tail heterogeneity function on (0, 1].
///
/// The estimator is a step function of u: it depends on u only through the
/// number c = ceil(k/u) of top ranks admitted by the second indicator. For
/// curves built from data, `by_tail_count[c - k]` holds its value for
/// c = k..n, which gives exact integrals. Curves built from tabulated values
/// (`from_values`) have no step form and integrate on their grid.
struct HeterogeneityCurve {
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> u_grid;
  std::vector<double> lambda_hat;
  double lambda_at_1 = 0.0;
  std::vector<double> by_tail_count;

  [[nodiscard]] bool has_step_form() const noexcept { return !by_tail_count.empty(); }
  /// Step-form value at u in (0, 1].
  [[nodiscard]] double evaluate(double u) const;

  /// Tabulated curve on an ascending grid in (0, 1].
  static HeterogeneityCurve from_values(std::vector<double> u_grid, std::vector<double> values);
};

/// u = i/points for i = 1..points.
std::vector<double> uniform_u_grid(std::size_t points);

/// lambda-hat(u) = (1/k) sum_l Lambda_l(u), where Lambda_l counts ordered pairs
/// j1 != j2 within athlete l with R_{j1} > n - k and R_{j2} > n - k/u,
/// divided by m_l - 1. Requires every group to hold at least two values.
[[nodiscard]] double lambda_hat(const SpeedSample& sample, std::span<const std::size_t> ranks,
                                std::size_t k, double u);

/// R-hat(x, y): the same ordered-pair count with cuts n - kx and n - ky.
[[nodiscard]] double r_hat(const SpeedSample& sample, std::span<const std::size_t> ranks,
                           std::size_t k, double x, double y);

/// R-hat on the grid xs x ys, row-major by x.
std::vector<double> r_hat_surface(const SpeedSample& sample, std::span<const std::size_t> ranks,
                                  std::size_t k, std::span<const double> xs,
                                  std::span<const double> ys);

HeterogeneityCurve heterogeneity_curve(const SpeedSample& sample,
                                       std::span<const std::size_t> ranks, std::size_t k,
                                       std::span<const double> u_grid);

/// Expected lambda-hat(u) for exchangeable data: min((ceil(k/u) - 1)/(n - 1), 1).
[[nodiscard]] double homogeneous_reference(std::size_t n, std::size_t k, double u);

struct MLambdaOptions {
  enum class Method { exact, grid };
  Method method = Method::exact;
  // Uniform grid size when integrating a step-form curve numerically.
  std::size_t grid_points = 2000;
};

/// m(x) = (1 + x) * integral_0^1 u^x lambda(u) du, for x > -1.
///
/// Step-form curves integrate exactly by default. Grid integration
/// interpolates lambda linearly between nodes, integrates u^x against it in
/// closed form and holds lambda constant on (0, first node]; the floor
/// contributes O(step^(1+x)) error.
[[nodiscard]] double m_lambda(const HeterogeneityCurve& curve, double x,
                              const MLambdaOptions& options = {});

struct Weights {
  double w0 = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
};

[[nodiscard]] Weights weights(double gamma);

struct VarianceReduction {
  double delta_raw = 0.0;
  double delta = 0.0;  // clamped to [0, max_delta]
  bool clamped = false;
  Weights weights;
  double lambda_at_1 = 0.0;
  double m_neg_gamma = 0.0;
  double m_neg_2gamma = 0.0;
};

inline constexpr double max_delta = 0.999;

/// Delta-hat = w0 lambda(1) + w1 m(-gamma) + w2 m(-2 gamma), then clamped.
VarianceReduction delta_hat(const HeterogeneityCurve& curve, double gamma,
                            const MLambdaOptions& options = {}, Warnings* warnings = nullptr);

void to_json(nlohmann::json& j, const VarianceReduction& vr);

}  // namespace hevt
