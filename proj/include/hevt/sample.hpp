#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hevt {

/// Speeds (km/h) grouped by athlete. Athlete l owns the contiguous block
/// values[group_offsets[l], group_offsets[l] + group_sizes[l]).
struct SpeedSample {
  std::vector<double> values;
  std::vector<std::size_t> group_offsets;
  std::vector<std::size_t> group_sizes;
  // Optional; either empty or one id per group.
  std::vector<std::string> athlete_ids;

  [[nodiscard]] std::size_t n() const noexcept { return values.size(); }
  [[nodiscard]] std::size_t p() const noexcept { return group_sizes.size(); }

  [[nodiscard]] std::span<const double> group(std::size_t l) const {
    return std::span<const double>(values).subspan(group_offsets[l], group_sizes[l]);
  }

  [[nodiscard]] std::size_t min_group_size() const noexcept;

  /// Throws std::invalid_argument unless the blocks partition [0, n),
  /// every block is non-empty and every value is finite and positive.
  void validate() const;

  /// Builds a sample from explicit per-athlete blocks, in the given order.
  static SpeedSample from_groups(const std::vector<std::vector<double>>& groups);

  friend bool operator==(const SpeedSample&, const SpeedSample&) = default;
};

void to_json(nlohmann::json& j, const SpeedSample& sample);
void from_json(const nlohmann::json& j, SpeedSample& sample);

/// Text written by write_sample_json and the two CSV files of the pair form.
std::string sample_json_text(const SpeedSample& sample);
std::string sample_values_csv(const SpeedSample& sample);
std::string sample_groups_csv(const SpeedSample& sample);

SpeedSample read_sample_json(const std::filesystem::path& path);
void write_sample_json(const SpeedSample& sample, const std::filesystem::path& path);

/// Two-file form: `value` column (one speed per row, athlete blocks
/// consecutive) and `athlete_id,offset,size` rows.
void write_sample_csv_pair(const SpeedSample& sample, const std::filesystem::path& values_csv,
                           const std::filesystem::path& groups_csv);
SpeedSample read_sample_csv_pair(const std::filesystem::path& values_csv,
                                 const std::filesystem::path& groups_csv);

}  // namespace hevt
