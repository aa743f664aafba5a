#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hevt/inference.hpp"
#include "hevt/sample.hpp"
#include "json.hpp"

namespace hevt {

/// Power tail at a finite endpoint: survival ((endpoint - x) / scale)^shape
/// on [endpoint - scale, endpoint]. Extreme value index -1/shape.
struct TailGroup {
  double share = 1.0;  // relative share of athletes
  double endpoint = 0.0;
  double scale = 1.0;
  double shape = 1.0;

  [[nodiscard]] double survival(double x) const noexcept;
  [[nodiscard]] double gamma() const noexcept { return -1.0 / shape; }
};

/// Athletes are split into consecutive blocks by group share; athlete l
/// draws `records_of(l)` i.i.d. values from its group's law.
struct Scenario {
  std::size_t p = 0;
  std::vector<std::size_t> records{5};  // one entry (constant) or one per athlete
  std::vector<TailGroup> groups;
  std::uint64_t seed = 20240101;

  void validate() const;
  [[nodiscard]] std::size_t records_of(std::size_t athlete) const;
  [[nodiscard]] std::size_t n() const;
  /// First athlete index of each group, plus p at the end.
  [[nodiscard]] std::vector<std::size_t> group_boundaries() const;
  /// Total record count per group.
  [[nodiscard]] std::vector<std::size_t> group_records() const;
  /// max over populated groups of their endpoints.
  [[nodiscard]] double true_endpoint() const;
  /// Index of the top group(s); the heaviest tail among them sets gamma.
  [[nodiscard]] double true_gamma() const;
  /// Same design with p chosen so that n = p * m (constant m only).
  [[nodiscard]] Scenario with_n(std::size_t n) const;
  [[nodiscard]] Scenario with_seed(std::uint64_t seed) const;
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

/// SplitMix64 finalizer.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;
/// Seed of replication `rep` derived from a base seed.
[[nodiscard]] std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep) noexcept;

struct SimulatedSample {
  SpeedSample sample;
  double true_endpoint = 0.0;
  double true_gamma = 0.0;
};

/// Athlete l uses std::mt19937_64 seeded with mix64(seed ^ l); uniforms
/// are (bits >> 11) * 2^-53 shifted into (0, 1].
SimulatedSample generate(const Scenario& scenario);

/// Record-weighted average survival of the scenario and its inverse.
class PopulationTail {
 public:
  explicit PopulationTail(const Scenario& scenario);

  [[nodiscard]] double survival(double x) const noexcept;
  /// q with survival(q) = s, by bisection to 1e-12; s >= 1 maps to the lower
  /// support edge and s <= 0 to the endpoint.
  [[nodiscard]] double quantile(double s) const;
  /// sum_g weight_g T_g(q(a)) T_g(q(b)), weights summing to one.
  [[nodiscard]] double joint(double a, double b) const;

 private:
  std::vector<TailGroup> groups_;
  std::vector<double> weights_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

/// Pre-limit R_n(x, y) = (1/k) sum_i P(U_i < kx/n) P(U_i < ky/n) at the
/// scenario's n.
[[nodiscard]] double true_r_oracle(const Scenario& scenario, std::size_t k, double x, double y);
std::vector<double> true_r_surface(const Scenario& scenario, std::size_t k,
                                   std::span<const double> xs, std::span<const double> ys);
/// Pre-limit lambda_n(u) = R_n(1, 1/u).
std::vector<double> true_lambda_oracle(const Scenario& scenario, std::size_t k,
                                       std::span<const double> u_grid);
/// Delta evaluated on the pre-limit lambda with the true gamma.
[[nodiscard]] double true_delta_oracle(const Scenario& scenario, std::size_t k,
                                       std::size_t grid_points = 2000);

struct CoverageOptions {
  std::size_t reps = 500;
  double level = 0.95;
  double k_frac = 0.05;
  MLambdaOptions m_lambda;
};

struct CoverageRow {
  std::size_t rep = 0;
  std::size_t k = 0;
  bool finite_endpoint = true;
  double gamma = 0.0;
  double endpoint_time = 0.0;
  double delta = 0.0;
  double lcb_time = 0.0;      // with Delta-hat
  double lcb_time_iid = 0.0;  // with Delta = 0
  bool covered = false;
  bool covered_iid = false;
};

struct CoverageResult {
  std::size_t reps = 0;
  double level = 0.0;
  double true_endpoint = 0.0;
  double true_time = 0.0;
  double coverage = 0.0;
  double standard_error = 0.0;
  double coverage_iid = 0.0;
  // Share of replications whose Delta-hat bound is strictly tighter.
  double tighter_fraction = 0.0;
  std::vector<CoverageRow> rows;
};

/// A replication covers when its lower time bound lies below the true
/// ultimate time. Replications without a finite endpoint have an unbounded
/// interval and count as covering.
CoverageResult coverage_experiment(const Scenario& scenario, const CoverageOptions& options);

struct BiasRow {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t reps = 0;
  std::size_t excluded = 0;  // replications with gamma-hat >= 0
  double rmse_gamma = 0.0;
  double rmse_endpoint = 0.0;
  double rmse_lambda_at_1 = 0.0;
  double rmse_delta = 0.0;
  double median_endpoint_error = 0.0;
  double lambda_at_1_oracle = 0.0;
  double delta_oracle = 0.0;
  double mean_lambda_at_1 = 0.0;
};

std::vector<BiasRow> estimator_bias_experiment(const Scenario& scenario,
                                               std::span<const std::size_t> n_grid,
                                               std::size_t reps, double k_frac = 0.05);

struct LemmaRow {
  std::size_t n = 0;
  std::size_t k = 0;
  double median_sup_error = 0.0;
  std::vector<double> sup_errors;
};

struct LemmaOptions {
  std::size_t reps = 50;
  double k_frac = 0.05;
  double grid_min = 0.1;
  double grid_max = 2.0;
  std::size_t grid_points = 20;
};

/// sup over the grid of |R-hat - R_n|, per replication and n.
std::vector<LemmaRow> lemma_experiment(const Scenario& scenario,
                                       std::span<const std::size_t> n_grid,
                                       const LemmaOptions& options = {});

/// Evenly spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t points);

}  // namespace hevt
