#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hevt/csv.hpp"
#include "hevt/evt_core.hpp"
#include "hevt/heterogeneity.hpp"
#include "hevt/inference.hpp"
#include "hevt/pipeline.hpp"
#include "hevt/sample.hpp"
#include "hevt/simulation.hpp"

namespace hevt::cli {

using nlohmann::json;

void OutputSink::add(const std::string& name, std::string content) {
  pending_.emplace_back(name, std::move(content));
}

std::vector<std::filesystem::path> OutputSink::commit() {
  std::vector<std::filesystem::path> paths;
  for (const auto& [name, content] : pending_) {
    auto path = dir_ / name;
    if (!force_ && std::filesystem::exists(path)) {
      throw std::runtime_error("refusing to overwrite " + path.string() + " (use --force)");
    }
    paths.push_back(std::move(path));
  }
  std::filesystem::create_directories(dir_);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    std::ofstream out(paths[i], std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + paths[i].string());
    out << pending_[i].second;
  }
  pending_.clear();
  return paths;
}

std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HEVT_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

std::size_t KSelection::resolve(std::size_t n, double default_frac) const {
  if (k && k_frac) throw std::invalid_argument("give either k or a k fraction, not both");
  if (k) {
    if (*k < 1 || *k >= n) {
      throw std::out_of_range("k = " + std::to_string(*k) + " outside [1, " +
                              std::to_string(n - 1) + "]");
    }
    return *k;
  }
  const double frac = k_frac.value_or(default_frac);
  if (!(frac > 0.0 && frac < 1.0)) throw std::invalid_argument("k fraction must lie in (0, 1)");
  return k_from_fraction(n, frac);
}

std::string lcb_column(double level) {
  const double pct = level * 100.0;
  const double rounded = std::round(pct);
  const std::string tag =
      std::abs(pct - rounded) < 1e-9 ? std::to_string(static_cast<long long>(rounded))
                                     : format_double(pct);
  return "lcb" + tag + "_time";
}

namespace {

std::string level_key(double level) { return format_double(level); }

json warnings_json(const Warnings& warnings) { return json(warnings); }

std::string sweep_header(const std::vector<double>& levels) {
  std::vector<std::string> cells{"k", "gamma", "endpoint_time", "sigma2_iid", "delta"};
  for (double level : levels) cells.push_back(lcb_column(level));
  return csv_row(cells) + '\n';
}

std::string sweep_line(const InferenceResult& r) {
  std::vector<std::string> cells{std::to_string(r.k), format_double(r.gamma),
                                 format_double(r.endpoint_time), format_double(r.sigma2_iid),
                                 format_double(r.delta)};
  for (const auto& b : r.bounds) cells.push_back(format_double(b.lcb_time));
  return csv_row(cells) + '\n';
}

std::string fit_row(const TailFit& f) {
  return csv_row({std::to_string(f.k), format_double(f.threshold), format_double(f.m1),
                  format_double(f.m2), format_double(f.v_n), format_double(f.gamma),
                  format_double(f.endpoint), format_double(f.scale)}) +
         '\n';
}

InferenceOptions inference_options(const std::vector<double>& levels, double distance_m,
                                   std::optional<std::size_t> k_lambda) {
  InferenceOptions options;
  options.levels = levels;
  options.distance_m = distance_m;
  options.k_lambda = k_lambda;
  return options;
}

json protocol_json(const InferenceResult& r) {
  json bounds = json::object();
  for (const auto& b : r.bounds) bounds[level_key(b.level)] = b.lcb_time;
  return {{"k", r.k},
          {"gamma", r.gamma},
          {"endpoint_time", r.endpoint_time},
          {"delta", r.delta},
          {"lcb_time", bounds}};
}

Scenario read_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  try {
    json j;
    in >> j;
    return j.get<Scenario>();
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed scenario " + path.string() + ": " + e.what());
  }
}

void flatten(const json& node, const std::string& path, std::ostringstream& out) {
  if (node.is_object()) {
    if (node.empty()) out << path << ": {}\n";
    for (const auto& [key, value] : node.items()) {
      flatten(value, path.empty() ? key : path + "." + key, out);
    }
  } else if (node.is_array()) {
    if (node.empty()) out << path << ": []\n";
    for (std::size_t i = 0; i < node.size(); ++i) {
      flatten(node[i], path + "[" + std::to_string(i) + "]", out);
    }
  } else {
    out << path << ": " << node.dump() << '\n';
  }
}

}  // namespace

json cmd_prepare(const PrepareConfig& config, OutputSink& sink) {
  Warnings warnings;
  const RecordTable raw = parse_csv(config.input, config.columns);
  const RecordTable capped = cap_per_athlete(raw, config.cap);
  const RecordTable smoothed = smooth_ties(capped, config.resolution, &warnings);
  const SpeedSample sample = group(smoothed, config.distance_m);
  if (sample.n() == 0) throw IngestError("no records in " + config.input.string());

  const auto [lo, hi] = std::minmax_element(sample.values.begin(), sample.values.end());
  json summary{{"input", config.input.string()},
               {"raw_records", raw.rows.size()},
               {"n", sample.n()},
               {"p", sample.p()},
               {"best_time", to_time(*hi, config.distance_m)},
               {"worst_time", to_time(*lo, config.distance_m)},
               {"cap", config.cap},
               {"resolution", config.resolution},
               {"distance_m", config.distance_m},
               {"warnings", warnings_json(warnings)}};

  sink.add("sample.json", sample_json_text(sample));
  if (config.csv_pair) {
    sink.add("sample_values.csv", sample_values_csv(sample));
    sink.add("sample_groups.csv", sample_groups_csv(sample));
  }
  sink.add("prepare.json", summary.dump(2) + '\n');
  return summary;
}

json cmd_estimate(const EstimateConfig& config, OutputSink& sink) {
  Warnings warnings;
  const PreparedData data =
      prepare_data(read_sample_json(config.sample), config.singletons, &warnings);
  const std::size_t k = config.k.resolve(data.sample.n());
  const auto options = inference_options(config.levels, config.distance_m, config.k_lambda);
  const InferenceResult r = infer_at_k(data.input(), k, options, &warnings);

  json summary = r;
  summary["n"] = data.sample.n();
  summary["p"] = data.sample.p();
  summary["n_lambda"] = data.lambda_sample.n();
  summary["p_lambda"] = data.lambda_sample.p();
  summary["k_lambda"] = config.k_lambda.value_or(k);
  summary["lambda_at_1"] = r.variance_reduction.lambda_at_1;
  summary["singleton_policy"] = to_string(config.singletons);
  summary["warnings"] = warnings_json(warnings);

  sink.add("estimate.csv", sweep_header(config.levels) + sweep_line(r));
  sink.add("tail_fit.csv", "k,threshold,m1,m2,v_n,gamma,endpoint,scale\n" + fit_row(r.fit));
  sink.add("estimate.json", summary.dump(2) + '\n');
  return summary;
}

json cmd_sweep(const SweepConfig& config, OutputSink& sink) {
  Warnings warnings;
  const PreparedData data =
      prepare_data(read_sample_json(config.sample), config.singletons, &warnings);
  const auto options = inference_options(config.levels, config.distance_m, config.k_lambda);
  const SweepResult result = sweep(data.input(), config.k_min_frac, config.k_max_frac, config.step,
                                   options, &warnings);

  json point = nullptr;
  const std::size_t k_point = k_from_fraction(data.sample.n(), config.point_frac);
  const auto it = std::find_if(result.rows.begin(), result.rows.end(),
                               [&](const InferenceResult& r) { return r.k == k_point; });
  if (it != result.rows.end()) {
    point = protocol_json(*it);
  } else {
    try {
      point = protocol_json(infer_at_k(data.input(), k_point, options, &warnings));
    } catch (const NoFiniteEndpointError&) {
      warn(&warnings, "no finite endpoint at k = " + std::to_string(k_point) +
                          " for the single-k protocol");
    }
  }

  json median_bounds = json::object();
  for (const auto& [level, time] : result.median_lcb_time) median_bounds[level_key(level)] = time;
  const json median{{"gamma", result.median_gamma},
                    {"endpoint_time", result.median_endpoint_time},
                    {"delta", result.median_delta},
                    {"lcb_time", median_bounds}};

  std::string csv = sweep_header(config.levels);
  std::string fits = "k,threshold,m1,m2,v_n,gamma,endpoint,scale\n";
  for (const auto& r : result.rows) {
    csv += sweep_line(r);
    fits += fit_row(r.fit);
  }

  json summary{{"n", data.sample.n()},
               {"p", data.sample.p()},
               {"k_range", {config.k_min_frac, config.k_max_frac}},
               {"step", config.step},
               {"rows", result.rows.size()},
               {"excluded_k", result.excluded_k},
               {"protocols", {{format_double(config.point_frac * 100.0) + "%", point},
                              {"median", median}}},
               {"singleton_policy", to_string(config.singletons)},
               {"warnings", warnings_json(warnings)}};

  sink.add("sweep.csv", csv);
  sink.add("sweep_fits.csv", fits);
  sink.add("sweep_summary.json", summary.dump(2) + '\n');
  return summary;
}

json cmd_lambda(const LambdaConfig& config, OutputSink& sink) {
  Warnings warnings;
  const PreparedData data =
      prepare_data(read_sample_json(config.sample), config.singletons, &warnings);
  const std::size_t n = data.lambda_sample.n();
  const std::size_t k = config.k.resolve(n);
  const auto grid = uniform_u_grid(config.grid);
  const HeterogeneityCurve curve =
      heterogeneity_curve(data.lambda_sample, data.lambda_ranks, k, grid);

  std::string csv = "u,lambda_hat\n";
  std::string ref = "u,reference\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv += csv_row({format_double(grid[i]), format_double(curve.lambda_hat[i])}) + '\n';
    ref += csv_row({format_double(grid[i]), format_double(homogeneous_reference(n, k, grid[i]))}) +
           '\n';
  }

  json summary{{"k", k},
               {"n", n},
               {"p", data.lambda_sample.p()},
               {"grid", config.grid},
               {"lambda_at_1", curve.lambda_at_1},
               {"reference_at_1", homogeneous_reference(n, k, 1.0)},
               {"singleton_policy", to_string(config.singletons)},
               {"warnings", warnings_json(warnings)}};

  sink.add("lambda.csv", csv);
  sink.add("lambda_reference.csv", ref);
  sink.add("lambda.json", summary.dump(2) + '\n');
  return summary;
}

json cmd_rsurface(const RSurfaceConfig& config, OutputSink& sink) {
  Warnings warnings;
  const PreparedData data =
      prepare_data(read_sample_json(config.sample), config.singletons, &warnings);
  const std::size_t n = data.lambda_sample.n();
  const std::size_t k = config.k.resolve(n);
  const auto axis = linspace(config.grid_min, config.grid_max, config.grid_points);
  const auto surface = r_hat_surface(data.lambda_sample, data.lambda_ranks, k, axis, axis);

  std::string csv = "x,y,r_hat\n";
  for (std::size_t i = 0; i < axis.size(); ++i) {
    for (std::size_t j = 0; j < axis.size(); ++j) {
      csv += csv_row({format_double(axis[i]), format_double(axis[j]),
                      format_double(surface[i * axis.size() + j])}) +
             '\n';
    }
  }

  json summary{{"k", k},
               {"n", n},
               {"p", data.lambda_sample.p()},
               {"grid", {config.grid_min, config.grid_max, config.grid_points}},
               {"singleton_policy", to_string(config.singletons)},
               {"warnings", warnings_json(warnings)}};

  sink.add("rsurface.csv", csv);
  sink.add("rsurface.json", summary.dump(2) + '\n');
  return summary;
}

json cmd_extrapolate(const ExtrapolateConfig& config, OutputSink& sink) {
  Warnings warnings;
  const SpeedSample sample = read_sample_json(config.sample);
  const OrderedSample ordered = sort_ascending(sample.values);
  const std::size_t k = config.k.resolve(sample.n());
  const TailFit fit = fit_tail(ordered, k);
  if (!fit.has_finite_endpoint()) {
    throw NoFiniteEndpointError("no finite endpoint at k = " + std::to_string(k));
  }
  const std::size_t max_rank = std::min(config.max_rank.value_or(k), sample.n());
  const ExtrapolationSeries series = extrapolation_series(fit, ordered, max_rank);

  std::string csv = "rank,transformed_rank,speed\n";
  for (const auto& pt : series.points) {
    csv += csv_row({std::to_string(pt.rank), format_double(pt.transformed_rank),
                    format_double(pt.speed)}) +
           '\n';
  }

  json summary{{"slope", series.slope},
               {"intercept", series.intercept},
               {"gamma", series.gamma},
               {"k", series.k},
               {"max_rank", max_rank},
               {"endpoint_time", to_time(series.intercept, config.distance_m)},
               {"rms_deviation", series.rms_deviation()},
               {"warnings", warnings_json(warnings)}};

  sink.add("extrapolation.csv", csv);
  sink.add("extrapolation.json", summary.dump(2) + '\n');
  return summary;
}

json cmd_simulate(const SimulateConfig& config, OutputSink& sink) {
  Scenario scenario = read_scenario(config.scenario);
  if (config.seed) scenario = scenario.with_seed(*config.seed);
  scenario.validate();
  json summary{{"experiment", config.experiment}, {"scenario", scenario}};

  if (config.experiment == "coverage") {
    CoverageOptions options;
    options.reps = config.reps.value_or(500);
    options.level = config.level;
    options.k_frac = config.k_frac;
    const CoverageResult result = coverage_experiment(scenario, options);

    std::string csv =
        "rep,k,finite_endpoint,gamma,endpoint_time,delta,lcb_time,lcb_time_iid,covered,"
        "covered_iid\n";
    for (const auto& r : result.rows) {
      csv += csv_row({std::to_string(r.rep), std::to_string(r.k), r.finite_endpoint ? "1" : "0",
                      format_double(r.gamma), format_double(r.endpoint_time),
                      format_double(r.delta), format_double(r.lcb_time),
                      format_double(r.lcb_time_iid), r.covered ? "1" : "0",
                      r.covered_iid ? "1" : "0"}) +
             '\n';
    }
    summary["reps"] = result.reps;
    summary["level"] = result.level;
    summary["k_frac"] = options.k_frac;
    summary["true_endpoint"] = result.true_endpoint;
    summary["true_time"] = result.true_time;
    summary["coverage"] = result.coverage;
    summary["standard_error"] = result.standard_error;
    summary["coverage_iid"] = result.coverage_iid;
    summary["tighter_fraction"] = result.tighter_fraction;
    sink.add("coverage_reps.csv", csv);
  } else if (config.experiment == "bias") {
    const std::size_t reps = config.reps.value_or(50);
    const auto rows = estimator_bias_experiment(scenario, config.n_grid, reps, config.k_frac);
    std::string csv =
        "n,k,reps,excluded,rmse_gamma,rmse_endpoint,rmse_lambda_at_1,rmse_delta,"
        "median_endpoint_error,lambda_at_1_oracle,delta_oracle,mean_lambda_at_1\n";
    for (const auto& r : rows) {
      csv += csv_row({std::to_string(r.n), std::to_string(r.k), std::to_string(r.reps),
                      std::to_string(r.excluded), format_double(r.rmse_gamma),
                      format_double(r.rmse_endpoint), format_double(r.rmse_lambda_at_1),
                      format_double(r.rmse_delta), format_double(r.median_endpoint_error),
                      format_double(r.lambda_at_1_oracle), format_double(r.delta_oracle),
                      format_double(r.mean_lambda_at_1)}) +
             '\n';
    }
    summary["reps"] = reps;
    summary["k_frac"] = config.k_frac;
    summary["n_grid"] = config.n_grid;
    summary["rmse_gamma"] = json::array();
    for (const auto& r : rows) summary["rmse_gamma"].push_back(r.rmse_gamma);
    sink.add("bias.csv", csv);
  } else if (config.experiment == "lemma") {
    LemmaOptions options;
    options.reps = config.reps.value_or(50);
    options.k_frac = config.k_frac;
    options.grid_min = config.grid_min;
    options.grid_max = config.grid_max;
    options.grid_points = config.grid_points;
    const auto rows = lemma_experiment(scenario, config.n_grid, options);
    std::string csv = "n,k,rep,sup_error\n";
    summary["median_sup_error"] = json::array();
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.sup_errors.size(); ++i) {
        csv += csv_row({std::to_string(r.n), std::to_string(r.k), std::to_string(i),
                        format_double(r.sup_errors[i])}) +
               '\n';
      }
      summary["median_sup_error"].push_back(r.median_sup_error);
    }
    summary["reps"] = options.reps;
    summary["k_frac"] = options.k_frac;
    summary["n_grid"] = config.n_grid;
    sink.add("lemma_reps.csv", csv);
  } else {
    throw std::invalid_argument("unknown experiment '" + config.experiment +
                                "' (coverage, bias or lemma)");
  }

  summary["warnings"] = json::array();
  sink.add(config.experiment + ".json", summary.dump(2) + '\n');
  return summary;
}

std::string render_table(const json& summary) {
  std::ostringstream out;
  flatten(summary, "", out);
  return out.str();
}

}  // namespace hevt::cli
