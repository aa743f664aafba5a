#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hevt/errors.hpp"
#include "hevt/sample.hpp"

namespace hevt {

struct Record {
  std::string athlete_id;
  double time_s = 0.0;
  std::optional<double> wind;
  std::optional<int> year;

  friend bool operator==(const Record&, const Record&) = default;
};

/// Raw per-athlete times in input file order.
struct RecordTable {
  std::vector<Record> rows;
};

/// Header names of the CSV columns. Wind and year are optional.
struct ColumnMapping {
  std::string athlete = "athlete_id";
  std::string time = "time_s";
  std::string wind = "wind";
  std::string year = "year";
};

/// Reads a comma-separated table with a header row. Every malformed numeric
/// cell is collected and reported in one IngestError, by data row number
/// (1-based, header excluded).
RecordTable parse_csv(const std::filesystem::path& path, const ColumnMapping& columns = {});
RecordTable parse_csv(std::istream& in, const ColumnMapping& columns = {});

/// Keeps each athlete's `cap` fastest records; equal times at the cut are
/// kept in input order. Surviving rows stay in input order.
RecordTable cap_per_athlete(const RecordTable& table, std::size_t cap);

/// Spreads the m rows sharing one recorded time t evenly over the rounding
/// interval: t - r/2 + r(2j-1)/(2m), j = 1..m. j follows ascending wind;
/// rows without wind come last, in input order. Grouping is across the
/// whole table, not per athlete.
RecordTable smooth_ties(const RecordTable& table, double resolution = 0.01,
                        Warnings* warnings = nullptr);

/// Average speed in km/h over `distance_m` meters.
[[nodiscard]] double to_speed(double time_s, double distance_m = 100.0);
[[nodiscard]] double to_time(double speed_kmh, double distance_m = 100.0);

/// Athletes ordered by id; records within an athlete in input order.
SpeedSample group(const RecordTable& table, double distance_m = 100.0);

enum class SingletonPolicy { drop, duplicate };

/// Removes (drop) or doubles (duplicate) athletes with a single record so
/// that every group has at least two values.
SpeedSample prepare_for_lambda(const SpeedSample& sample,
                               SingletonPolicy policy = SingletonPolicy::drop,
                               Warnings* warnings = nullptr);

SingletonPolicy parse_singleton_policy(const std::string& name);
std::string to_string(SingletonPolicy policy);

}  // namespace hevt
