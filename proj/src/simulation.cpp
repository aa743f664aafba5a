#include "hevt/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "hevt/heterogeneity.hpp"
#include "hevt/pipeline.hpp"

namespace hevt {

double TailGroup::survival(double x) const noexcept {
  if (x >= endpoint) return 0.0;
  const double z = (endpoint - x) / scale;
  if (z >= 1.0) return 1.0;
  return std::pow(z, shape);
}

void Scenario::validate() const {
  if (p == 0) throw std::invalid_argument("scenario: p must be positive");
  if (records.size() != 1 && records.size() != p) {
    throw std::invalid_argument("scenario: m must be a single count or one count per athlete");
  }
  for (std::size_t m : records) {
    if (m == 0) throw std::invalid_argument("scenario: every athlete needs at least one record");
  }
  if (groups.empty()) throw std::invalid_argument("scenario: family needs at least one group");
  for (const auto& g : groups) {
    if (!(g.share > 0.0) || !std::isfinite(g.share)) {
      throw std::invalid_argument("scenario: group shares must be positive");
    }
    if (!std::isfinite(g.endpoint) || !(g.scale > 0.0) || !(g.shape > 0.0) ||
        !std::isfinite(g.scale) || !std::isfinite(g.shape)) {
      throw std::invalid_argument("scenario: invalid distribution parameters");
    }
    if (!(g.endpoint - g.scale > 0.0)) {
      throw std::invalid_argument("scenario: support must stay positive (endpoint > scale)");
    }
  }
}

std::size_t Scenario::records_of(std::size_t athlete) const {
  return records.size() == 1 ? records.front() : records.at(athlete);
}

std::size_t Scenario::n() const {
  if (records.size() == 1) return p * records.front();
  std::size_t total = 0;
  for (std::size_t m : records) total += m;
  return total;
}

std::vector<std::size_t> Scenario::group_boundaries() const {
  double total = 0.0;
  for (const auto& g : groups) total += g.share;
  std::vector<std::size_t> bounds{0};
  double cumulative = 0.0;
  for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
    cumulative += groups[g].share;
    const auto b = static_cast<std::size_t>(std::llround(static_cast<double>(p) * cumulative / total));
    bounds.push_back(std::clamp(b, bounds.back(), p));
  }
  bounds.push_back(p);
  return bounds;
}

std::vector<std::size_t> Scenario::group_records() const {
  const auto bounds = group_boundaries();
  std::vector<std::size_t> totals(groups.size(), 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (records.size() == 1) {
      totals[g] = (bounds[g + 1] - bounds[g]) * records.front();
      continue;
    }
    for (std::size_t l = bounds[g]; l < bounds[g + 1]; ++l) totals[g] += records_of(l);
  }
  return totals;
}

double Scenario::true_endpoint() const {
  const auto totals = group_records();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (totals[g] > 0) best = std::max(best, groups[g].endpoint);
  }
  return best;
}

double Scenario::true_gamma() const {
  const auto totals = group_records();
  const double top = true_endpoint();
  double shape = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (totals[g] > 0 && groups[g].endpoint == top) shape = std::min(shape, groups[g].shape);
  }
  return -1.0 / shape;
}

Scenario Scenario::with_n(std::size_t target) const {
  if (records.size() != 1) {
    throw std::invalid_argument("scenario: resizing needs a constant record count");
  }
  Scenario s = *this;
  s.p = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(target) /
                                                static_cast<double>(records.front()))));
  return s;
}

Scenario Scenario::with_seed(std::uint64_t new_seed) const {
  Scenario s = *this;
  s.seed = new_seed;
  return s;
}

void to_json(nlohmann::json& j, const Scenario& s) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : s.groups) {
    groups.push_back({{"share", g.share}, {"endpoint", g.endpoint}, {"scale", g.scale},
                      {"shape", g.shape}});
  }
  j = nlohmann::json{{"p", s.p}, {"seed", s.seed}, {"family", {{"groups", groups}}}};
  if (s.records.size() == 1) {
    j["m"] = s.records.front();
  } else {
    j["m"] = s.records;
  }
}

void from_json(const nlohmann::json& j, Scenario& s) {
  s = Scenario{};
  j.at("p").get_to(s.p);
  const auto& m = j.at("m");
  if (m.is_array()) {
    m.get_to(s.records);
  } else {
    s.records = {m.get<std::size_t>()};
  }
  if (j.contains("seed")) j.at("seed").get_to(s.seed);
  const auto& family = j.at("family");
  const auto read_group = [](const nlohmann::json& g) {
    TailGroup t;
    t.share = g.value("share", 1.0);
    g.at("endpoint").get_to(t.endpoint);
    g.at("scale").get_to(t.scale);
    g.at("shape").get_to(t.shape);
    return t;
  };
  if (family.contains("groups")) {
    for (const auto& g : family.at("groups")) s.groups.push_back(read_group(g));
  } else {
    s.groups.push_back(read_group(family));
  }
  s.validate();
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep) noexcept {
  return mix64(base ^ mix64(rep));
}

SimulatedSample generate(const Scenario& scenario) {
  scenario.validate();
  const auto bounds = scenario.group_boundaries();
  SimulatedSample out;
  auto& sample = out.sample;
  sample.values.reserve(scenario.n());
  sample.group_offsets.reserve(scenario.p);
  sample.group_sizes.reserve(scenario.p);
  for (std::size_t g = 0; g < scenario.groups.size(); ++g) {
    const auto& law = scenario.groups[g];
    const double inv_shape = 1.0 / law.shape;
    for (std::size_t l = bounds[g]; l < bounds[g + 1]; ++l) {
      std::mt19937_64 engine(mix64(scenario.seed ^ static_cast<std::uint64_t>(l)));
      const std::size_t m = scenario.records_of(l);
      sample.group_offsets.push_back(sample.values.size());
      sample.group_sizes.push_back(m);
      for (std::size_t j = 0; j < m; ++j) {
        const double u = static_cast<double>((engine() >> 11) + 1) * 0x1.0p-53;
        sample.values.push_back(law.endpoint - law.scale * std::pow(u, inv_shape));
      }
    }
  }
  out.true_endpoint = scenario.true_endpoint();
  out.true_gamma = scenario.true_gamma();
  return out;
}

PopulationTail::PopulationTail(const Scenario& scenario) {
  scenario.validate();
  const auto totals = scenario.group_records();
  const auto n = static_cast<double>(scenario.n());
  lower_ = std::numeric_limits<double>::infinity();
  upper_ = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < scenario.groups.size(); ++g) {
    if (totals[g] == 0) continue;
    groups_.push_back(scenario.groups[g]);
    weights_.push_back(static_cast<double>(totals[g]) / n);
    lower_ = std::min(lower_, scenario.groups[g].endpoint - scenario.groups[g].scale);
    upper_ = std::max(upper_, scenario.groups[g].endpoint);
  }
}

double PopulationTail::survival(double x) const noexcept {
  double total = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) total += weights_[g] * groups_[g].survival(x);
  return total;
}

double PopulationTail::quantile(double s) const {
  if (std::isnan(s)) throw std::domain_error("PopulationTail::quantile: NaN level");
  if (s >= 1.0) return lower_;
  if (s <= 0.0) return upper_;
  double lo = lower_;
  double hi = upper_;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (survival(mid) > s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (!(hi - lo <= 1e-12)) throw std::runtime_error("PopulationTail::quantile: bisection failed");
  return 0.5 * (lo + hi);
}

double PopulationTail::joint(double a, double b) const {
  const double qa = quantile(a);
  const double qb = a == b ? qa : quantile(b);
  double total = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    total += weights_[g] * (groups_[g].survival(qa) * groups_[g].survival(qb));
  }
  return total;
}

double true_r_oracle(const Scenario& scenario, std::size_t k, double x, double y) {
  const PopulationTail tail(scenario);
  const auto n = static_cast<double>(scenario.n());
  const auto kd = static_cast<double>(k);
  return n / kd * tail.joint(kd * x / n, kd * y / n);
}

std::vector<double> true_r_surface(const Scenario& scenario, std::size_t k,
                                   std::span<const double> xs, std::span<const double> ys) {
  const PopulationTail tail(scenario);
  const auto n = static_cast<double>(scenario.n());
  const auto kd = static_cast<double>(k);
  std::vector<double> out;
  out.reserve(xs.size() * ys.size());
  for (double x : xs) {
    for (double y : ys) out.push_back(n / kd * tail.joint(kd * x / n, kd * y / n));
  }
  return out;
}

std::vector<double> true_lambda_oracle(const Scenario& scenario, std::size_t k,
                                       std::span<const double> u_grid) {
  const PopulationTail tail(scenario);
  const auto n = static_cast<double>(scenario.n());
  const auto kd = static_cast<double>(k);
  std::vector<double> out;
  out.reserve(u_grid.size());
  for (double u : u_grid) {
    if (!(u > 0.0)) throw std::domain_error("true_lambda_oracle: u must be positive");
    out.push_back(n / kd * tail.joint(kd / n, kd / (n * u)));
  }
  return out;
}

double true_delta_oracle(const Scenario& scenario, std::size_t k, std::size_t grid_points) {
  auto grid = uniform_u_grid(grid_points);
  auto values = true_lambda_oracle(scenario, k, grid);
  const auto curve = HeterogeneityCurve::from_values(std::move(grid), std::move(values));
  const double gamma = scenario.true_gamma();
  const auto w = weights(gamma);
  return w.w0 * curve.lambda_at_1 + w.w1 * m_lambda(curve, -gamma) +
         w.w2 * m_lambda(curve, -2.0 * gamma);
}

CoverageResult coverage_experiment(const Scenario& scenario, const CoverageOptions& options) {
  if (options.reps < 100) throw std::invalid_argument("coverage_experiment: need at least 100 reps");
  CoverageResult result;
  result.reps = options.reps;
  result.level = options.level;
  result.true_endpoint = scenario.true_endpoint();
  result.true_time = to_time(result.true_endpoint);

  InferenceOptions inference;
  inference.levels = {options.level};
  inference.m_lambda = options.m_lambda;

  std::size_t hits = 0;
  std::size_t hits_iid = 0;
  std::size_t tighter = 0;
  for (std::size_t rep = 0; rep < options.reps; ++rep) {
    const auto sim = generate(scenario.with_seed(replication_seed(scenario.seed, rep)));
    const auto data = prepare_data(sim.sample);
    CoverageRow row;
    row.rep = rep;
    row.k = k_from_fraction(data.sample.n(), options.k_frac);
    try {
      const auto r = infer_at_k(data.input(), row.k, inference);
      row.gamma = r.gamma;
      row.endpoint_time = r.endpoint_time;
      row.delta = r.delta;
      row.lcb_time = r.bounds.front().lcb_time;
      row.lcb_time_iid = lower_confidence_bound(r.fit, 0.0, options.level).lcb_time;
      row.covered = row.lcb_time < result.true_time;
      row.covered_iid = row.lcb_time_iid < result.true_time;
      if (row.lcb_time > row.lcb_time_iid) ++tighter;
    } catch (const NoFiniteEndpointError&) {
      row.finite_endpoint = false;
      row.gamma = fit_tail(data.ordered, row.k).gamma;
      row.covered = row.covered_iid = true;
    }
    hits += row.covered ? 1 : 0;
    hits_iid += row.covered_iid ? 1 : 0;
    result.rows.push_back(row);
  }
  const auto reps = static_cast<double>(options.reps);
  result.coverage = static_cast<double>(hits) / reps;
  result.standard_error = std::sqrt(result.coverage * (1.0 - result.coverage) / reps);
  result.coverage_iid = static_cast<double>(hits_iid) / reps;
  result.tighter_fraction = static_cast<double>(tighter) / reps;
  return result;
}

namespace {

double rmse(const std::vector<double>& errors) {
  if (errors.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double e : errors) s += e * e;
  return std::sqrt(s / static_cast<double>(errors.size()));
}

}  // namespace

std::vector<BiasRow> estimator_bias_experiment(const Scenario& scenario,
                                               std::span<const std::size_t> n_grid,
                                               std::size_t reps, double k_frac) {
  if (!std::is_sorted(n_grid.begin(), n_grid.end())) {
    throw std::invalid_argument("estimator_bias_experiment: n_grid must be ascending");
  }
  std::vector<BiasRow> rows;
  for (std::size_t target : n_grid) {
    const Scenario sized = scenario.with_n(target);
    BiasRow row;
    row.n = sized.n();
    row.k = k_from_fraction(row.n, k_frac);
    row.reps = reps;
    const double one = 1.0;
    row.lambda_at_1_oracle = true_lambda_oracle(sized, row.k, std::span(&one, 1)).front();
    row.delta_oracle = true_delta_oracle(sized, row.k);
    const double true_gamma = sized.true_gamma();
    const double true_endpoint = sized.true_endpoint();

    std::vector<double> e_gamma, e_endpoint, e_lambda, e_delta;
    double lambda_sum = 0.0;
    const std::uint64_t base = replication_seed(scenario.seed, row.n);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto sim = generate(sized.with_seed(replication_seed(base, rep)));
      const auto data = prepare_data(sim.sample);
      const auto fit = fit_tail(data.ordered, row.k);
      const auto curve = heterogeneity_curve(data.lambda_sample, data.lambda_ranks, row.k, {});
      e_lambda.push_back(curve.lambda_at_1 - row.lambda_at_1_oracle);
      lambda_sum += curve.lambda_at_1;
      e_gamma.push_back(fit.gamma - true_gamma);
      if (!fit.has_finite_endpoint()) {
        ++row.excluded;
        continue;
      }
      e_endpoint.push_back(fit.endpoint - true_endpoint);
      e_delta.push_back(delta_hat(curve, fit.gamma).delta_raw - row.delta_oracle);
    }
    row.rmse_gamma = rmse(e_gamma);
    row.rmse_endpoint = rmse(e_endpoint);
    row.rmse_lambda_at_1 = rmse(e_lambda);
    row.rmse_delta = rmse(e_delta);
    row.median_endpoint_error = e_endpoint.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                   : lower_median(e_endpoint);
    row.mean_lambda_at_1 = lambda_sum / static_cast<double>(reps);
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points < 2) throw std::invalid_argument("linspace: need at least two points");
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return out;
}

std::vector<LemmaRow> lemma_experiment(const Scenario& scenario,
                                       std::span<const std::size_t> n_grid,
                                       const LemmaOptions& options) {
  const auto grid = linspace(options.grid_min, options.grid_max, options.grid_points);
  std::vector<LemmaRow> rows;
  for (std::size_t target : n_grid) {
    const Scenario sized = scenario.with_n(target);
    LemmaRow row;
    row.n = sized.n();
    row.k = k_from_fraction(row.n, options.k_frac);
    const auto truth = true_r_surface(sized, row.k, grid, grid);
    const std::uint64_t base = replication_seed(scenario.seed, row.n);
    for (std::size_t rep = 0; rep < options.reps; ++rep) {
      const auto sim = generate(sized.with_seed(replication_seed(base, rep)));
      const auto data = prepare_data(sim.sample);
      const auto est = r_hat_surface(data.lambda_sample, data.lambda_ranks, row.k, grid, grid);
      double sup = 0.0;
      for (std::size_t i = 0; i < est.size(); ++i) sup = std::max(sup, std::abs(est[i] - truth[i]));
      row.sup_errors.push_back(sup);
    }
    row.median_sup_error = lower_median(row.sup_errors);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hevt
