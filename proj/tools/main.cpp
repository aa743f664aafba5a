#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using hevt::cli::KSelection;

struct Common {
  std::optional<std::string> out;
  bool force = false;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--out", common.out, "Output directory (default $HEVT_OUT_DIR, else .)");
  cmd->add_flag("--force", common.force, "Overwrite existing output files");
}

void add_k(CLI::App* cmd, KSelection& k) {
  auto* group = cmd->add_option_group("k", "Tail size");
  group->add_option("--k", k.k, "Number of top order statistics")->check(CLI::PositiveNumber);
  group->add_option("--k-frac", k.k_frac, "Tail size as a fraction of n")
      ->check(CLI::Range(0.0, 1.0));
  group->require_option(1);
}

void add_singletons(CLI::App* cmd, std::string& policy) {
  cmd->add_option("--singletons", policy, "Single-record athletes for lambda: drop|duplicate")
      ->check(CLI::IsMember({"drop", "duplicate"}))
      ->capture_default_str();
}

void add_levels(CLI::App* cmd, std::vector<double>& levels) {
  cmd->add_option("--levels", levels, "Confidence levels, comma separated")
      ->delimiter(',')
      ->check(CLI::Range(0.5, 1.0))
      ->capture_default_str();
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--k-range", "expected MIN:MAX");
  const double lo = std::stod(text.substr(0, colon));
  const double hi = std::stod(text.substr(colon + 1));
  if (!(lo > 0.0 && lo <= hi && hi < 1.0)) {
    throw CLI::ValidationError("--k-range", "need 0 < MIN <= MAX < 1");
  }
  return {lo, hi};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Endpoint estimation for grouped record data"};
  app.require_subcommand(1);
  Common common;
  std::string singletons = "drop";

  hevt::cli::PrepareConfig prepare;
  auto* c_prepare = app.add_subcommand("prepare", "Raw CSV to a grouped speed sample");
  c_prepare->add_option("input", prepare.input, "Record CSV")->required()->check(CLI::ExistingFile);
  c_prepare->add_option("--athlete-column", prepare.columns.athlete)->capture_default_str();
  c_prepare->add_option("--time-column", prepare.columns.time)->capture_default_str();
  c_prepare->add_option("--wind-column", prepare.columns.wind)->capture_default_str();
  c_prepare->add_option("--year-column", prepare.columns.year)->capture_default_str();
  c_prepare->add_option("--cap", prepare.cap, "Records kept per athlete")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_prepare->add_option("--resolution", prepare.resolution, "Timing resolution in seconds")
      ->capture_default_str();
  c_prepare->add_option("--distance", prepare.distance_m, "Race distance in meters")
      ->capture_default_str();
  c_prepare->add_flag("--csv-pair", prepare.csv_pair, "Also write the two-file CSV form");
  add_common(c_prepare, common);

  hevt::cli::EstimateConfig estimate;
  auto* c_estimate = app.add_subcommand("estimate", "Endpoint and bounds at one k");
  c_estimate->add_option("sample", estimate.sample)->required()->check(CLI::ExistingFile);
  add_k(c_estimate, estimate.k);
  c_estimate->add_option("--k-lambda", estimate.k_lambda, "k of the heterogeneity curve");
  add_levels(c_estimate, estimate.levels);
  add_singletons(c_estimate, singletons);
  c_estimate->add_option("--distance", estimate.distance_m)->capture_default_str();
  add_common(c_estimate, common);

  hevt::cli::SweepConfig sweep;
  std::string k_range;
  auto* c_sweep = app.add_subcommand("sweep", "Estimates over a range of k with medians");
  c_sweep->add_option("sample", sweep.sample)->required()->check(CLI::ExistingFile);
  c_sweep->add_option("--k-range", k_range, "MIN:MAX as fractions of n, e.g. 0.03:0.07")
      ->required();
  c_sweep->add_option("--step", sweep.step, "k step")->check(CLI::PositiveNumber)->capture_default_str();
  c_sweep->add_option("--point-frac", sweep.point_frac, "k/n of the single-k protocol")
      ->capture_default_str();
  c_sweep->add_option("--k-lambda", sweep.k_lambda, "Fixed k of the heterogeneity curve");
  add_levels(c_sweep, sweep.levels);
  add_singletons(c_sweep, singletons);
  c_sweep->add_option("--distance", sweep.distance_m)->capture_default_str();
  add_common(c_sweep, common);

  hevt::cli::LambdaConfig lambda;
  auto* c_lambda = app.add_subcommand("lambda", "Heterogeneity curve and homogeneous reference");
  c_lambda->add_option("sample", lambda.sample)->required()->check(CLI::ExistingFile);
  add_k(c_lambda, lambda.k);
  c_lambda->add_option("--grid", lambda.grid, "Number of u points in (0, 1]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_singletons(c_lambda, singletons);
  add_common(c_lambda, common);

  hevt::cli::RSurfaceConfig rsurface;
  auto* c_rsurface = app.add_subcommand("rsurface", "Tail dependence surface on a square grid");
  c_rsurface->add_option("sample", rsurface.sample)->required()->check(CLI::ExistingFile);
  add_k(c_rsurface, rsurface.k);
  c_rsurface->add_option("--grid-min", rsurface.grid_min)->capture_default_str();
  c_rsurface->add_option("--grid-max", rsurface.grid_max)->capture_default_str();
  c_rsurface->add_option("--grid-points", rsurface.grid_points)->capture_default_str();
  add_singletons(c_rsurface, singletons);
  add_common(c_rsurface, common);

  hevt::cli::ExtrapolateConfig extrapolate;
  auto* c_extrapolate = app.add_subcommand("extrapolate", "Top speeds against transformed rank");
  c_extrapolate->add_option("sample", extrapolate.sample)->required()->check(CLI::ExistingFile);
  add_k(c_extrapolate, extrapolate.k);
  c_extrapolate->add_option("--max-rank", extrapolate.max_rank, "Ranks listed (default k)");
  c_extrapolate->add_option("--distance", extrapolate.distance_m)->capture_default_str();
  add_common(c_extrapolate, common);

  hevt::cli::SimulateConfig simulate;
  auto* c_simulate = app.add_subcommand("simulate", "Monte Carlo experiments on a scenario");
  c_simulate->add_option("scenario", simulate.scenario)->required()->check(CLI::ExistingFile);
  c_simulate->add_option("--experiment", simulate.experiment)
      ->check(CLI::IsMember({"coverage", "bias", "lemma"}))
      ->capture_default_str();
  c_simulate->add_option("--seed", simulate.seed,
                         "Base seed (default: the scenario's seed, else 20240101)");
  c_simulate->add_option("--reps", simulate.reps, "Replications (coverage 500, else 50)");
  c_simulate->add_option("--level", simulate.level)->capture_default_str();
  c_simulate->add_option("--k-frac", simulate.k_frac)->capture_default_str();
  c_simulate->add_option("--n-grid", simulate.n_grid, "Sample sizes for bias and lemma")
      ->delimiter(',');
  c_simulate->add_option("--grid-min", simulate.grid_min)->capture_default_str();
  c_simulate->add_option("--grid-max", simulate.grid_max)->capture_default_str();
  c_simulate->add_option("--grid-points", simulate.grid_points)->capture_default_str();
  add_common(c_simulate, common);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto policy = hevt::parse_singleton_policy(singletons);
    hevt::cli::OutputSink sink(hevt::cli::resolve_out_dir(common.out), common.force);
    nlohmann::json summary;
    if (*c_prepare) {
      summary = hevt::cli::cmd_prepare(prepare, sink);
    } else if (*c_estimate) {
      estimate.singletons = policy;
      summary = hevt::cli::cmd_estimate(estimate, sink);
    } else if (*c_sweep) {
      std::tie(sweep.k_min_frac, sweep.k_max_frac) = parse_range(k_range);
      sweep.singletons = policy;
      summary = hevt::cli::cmd_sweep(sweep, sink);
    } else if (*c_lambda) {
      lambda.singletons = policy;
      summary = hevt::cli::cmd_lambda(lambda, sink);
    } else if (*c_rsurface) {
      rsurface.singletons = policy;
      summary = hevt::cli::cmd_rsurface(rsurface, sink);
    } else if (*c_extrapolate) {
      summary = hevt::cli::cmd_extrapolate(extrapolate, sink);
    } else {
      summary = hevt::cli::cmd_simulate(simulate, sink);
    }
    sink.commit();
    std::cout << hevt::cli::render_table(summary);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
