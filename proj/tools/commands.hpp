#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hevt/ingest.hpp"
#include "json.hpp"

namespace hevt::cli {

/// Collects output files in memory and writes them together. Existing files
/// are never replaced unless `force` is set.
class OutputSink {
 public:
  OutputSink(std::filesystem::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

  void add(const std::string& name, std::string content);
  /// Writes every pending file; fails before writing anything if one exists.
  std::vector<std::filesystem::path> commit();
  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  bool force_;
  std::vector<std::pair<std::string, std::string>> pending_;
};

/// Output directory: the flag if given, else $HEVT_OUT_DIR, else ".".
std::filesystem::path resolve_out_dir(const std::optional<std::string>& flag);

struct KSelection {
  std::optional<std::size_t> k;
  std::optional<double> k_frac;
  /// k_frac default when neither is given.
  [[nodiscard]] std::size_t resolve(std::size_t n, double default_frac = 0.05) const;
};

struct PrepareConfig {
  std::filesystem::path input;
  ColumnMapping columns;
  std::size_t cap = 5;
  double resolution = 0.01;
  double distance_m = 100.0;
  bool csv_pair = false;
};

struct EstimateConfig {
  std::filesystem::path sample;
  KSelection k;
  std::optional<std::size_t> k_lambda;
  std::vector<double> levels{0.75, 0.95};
  SingletonPolicy singletons = SingletonPolicy::drop;
  double distance_m = 100.0;
};

struct SweepConfig {
  std::filesystem::path sample;
  double k_min_frac = 0.03;
  double k_max_frac = 0.07;
  std::size_t step = 1;
  // k/n of the single-k protocol reported next to the medians.
  double point_frac = 0.05;
  std::optional<std::size_t> k_lambda;
  std::vector<double> levels{0.75, 0.95};
  SingletonPolicy singletons = SingletonPolicy::drop;
  double distance_m = 100.0;
};

struct LambdaConfig {
  std::filesystem::path sample;
  KSelection k;
  std::size_t grid = 200;
  SingletonPolicy singletons = SingletonPolicy::drop;
};

struct RSurfaceConfig {
  std::filesystem::path sample;
  KSelection k;
  double grid_min = 0.1;
  double grid_max = 2.0;
  std::size_t grid_points = 20;
  SingletonPolicy singletons = SingletonPolicy::drop;
};

struct ExtrapolateConfig {
  std::filesystem::path sample;
  KSelection k;
  std::optional<std::size_t> max_rank;  // defaults to k
  double distance_m = 100.0;
};

struct SimulateConfig {
  std::filesystem::path scenario;
  std::string experiment = "coverage";  // coverage | bias | lemma
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  double level = 0.95;
  double k_frac = 0.05;
  std::vector<std::size_t> n_grid{2000, 20000, 200000};
  double grid_min = 0.1;
  double grid_max = 2.0;
  std::size_t grid_points = 20;
};

// Each command returns its JSON summary (also queued as a file) and leaves
// the files in `sink` for the caller to commit.
nlohmann::json cmd_prepare(const PrepareConfig& config, OutputSink& sink);
nlohmann::json cmd_estimate(const EstimateConfig& config, OutputSink& sink);
nlohmann::json cmd_sweep(const SweepConfig& config, OutputSink& sink);
nlohmann::json cmd_lambda(const LambdaConfig& config, OutputSink& sink);
nlohmann::json cmd_rsurface(const RSurfaceConfig& config, OutputSink& sink);
nlohmann::json cmd_extrapolate(const ExtrapolateConfig& config, OutputSink& sink);
nlohmann::json cmd_simulate(const SimulateConfig& config, OutputSink& sink);

/// Flattened `path: value` lines of a summary, one per leaf.
std::string render_table(const nlohmann::json& summary);

/// Column name for a bound level, e.g. 0.95 -> "lcb95_time".
std::string lcb_column(double level);

}  // namespace hevt::cli
