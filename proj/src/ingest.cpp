#include "hevt/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "hevt/csv.hpp"

namespace hevt {

namespace {

template <typename T>
std::optional<T> parse_cell(const std::string& cell) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) return std::nullopt;
  }
  return value;
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

RecordTable parse_csv(const std::filesystem::path& path, const ColumnMapping& columns) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open input file: " + path.string());
  return parse_csv(in, columns);
}

RecordTable parse_csv(std::istream& in, const ColumnMapping& columns) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("input has no header row");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  const auto athlete_col = find_column(header, columns.athlete);
  const auto time_col = find_column(header, columns.time);
  if (!athlete_col) throw IngestError("missing required column '" + columns.athlete + "'");
  if (!time_col) throw IngestError("missing required column '" + columns.time + "'");
  const auto wind_col = find_column(header, columns.wind);
  const auto year_col = find_column(header, columns.year);

  RecordTable table;
  std::vector<std::string> problems;
  for (std::size_t row = 1; std::getline(in, line); ++row) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const std::string tag = "row " + std::to_string(row);
    const auto cell = [&](std::optional<std::size_t> col) -> const std::string* {
      if (!col || *col >= cells.size()) return nullptr;
      return &cells[*col];
    };

    Record rec;
    if (const auto* id = cell(athlete_col); id != nullptr && !id->empty()) {
      rec.athlete_id = *id;
    } else {
      problems.push_back(tag + ": missing " + columns.athlete);
    }

    const auto* time_cell = cell(time_col);
    const auto time = time_cell ? parse_cell<double>(*time_cell) : std::nullopt;
    if (!time || *time <= 0.0) {
      problems.push_back(tag + ": " + columns.time + " '" + (time_cell ? *time_cell : "") +
                         "' is not a positive number");
    } else {
      rec.time_s = *time;
    }

    if (const auto* w = cell(wind_col); w != nullptr && !w->empty()) {
      rec.wind = parse_cell<double>(*w);
      if (!rec.wind) problems.push_back(tag + ": " + columns.wind + " '" + *w + "' is not a number");
    }
    if (const auto* y = cell(year_col); y != nullptr && !y->empty()) {
      rec.year = parse_cell<int>(*y);
      if (!rec.year) problems.push_back(tag + ": " + columns.year + " '" + *y + "' is not an integer");
    }
    table.rows.push_back(std::move(rec));
  }

  if (!problems.empty()) {
    std::string message = "malformed input (" + std::to_string(problems.size()) + " problem(s)):";
    for (const auto& p : problems) message += "\n  " + p;
    throw IngestError(message);
  }
  return table;
}

RecordTable cap_per_athlete(const RecordTable& table, std::size_t cap) {
  if (cap == 0) throw std::invalid_argument("cap_per_athlete: cap must be at least 1");
  std::unordered_map<std::string, std::vector<std::size_t>> by_athlete;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    by_athlete[table.rows[i].athlete_id].push_back(i);
  }
  std::vector<bool> keep(table.rows.size(), false);
  for (auto& [id, idx] : by_athlete) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return table.rows[a].time_s < table.rows[b].time_s;
    });
    for (std::size_t j = 0; j < std::min(cap, idx.size()); ++j) keep[idx[j]] = true;
  }
  RecordTable out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (keep[i]) out.rows.push_back(table.rows[i]);
  }
  return out;
}

RecordTable smooth_ties(const RecordTable& table, double resolution, Warnings* warnings) {
  if (!(resolution > 0.0)) throw std::invalid_argument("smooth_ties: resolution must be positive");

  std::map<long long, std::vector<std::size_t>> ties;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double t = table.rows[i].time_s;
    const double steps = t / resolution;
    const long long idx = std::llround(steps);
    if (std::abs(t - static_cast<double>(idx) * resolution) > 1e-9) {
      throw std::invalid_argument("smooth_ties: time " + format_double(t) + " in row " +
                                  std::to_string(i + 1) + " is not a multiple of the resolution");
    }
    ties[idx].push_back(i);
  }

  RecordTable out = table;
  for (auto& [idx, rows] : ties) {
    // Rows are already in input order; the stable sort puts measured winds
    // first, ascending.
    const double base = table.rows[rows.front()].time_s;
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      const auto& wa = table.rows[a].wind;
      const auto& wb = table.rows[b].wind;
      if (wa && wb) return *wa < *wb;
      return wa.has_value() && !wb.has_value();
    });
    const auto m = static_cast<double>(rows.size());
    for (std::size_t j = 1; j <= rows.size(); ++j) {
      // t - r/2 + r(2j-1)/(2m), arranged so that m = 1 returns t exactly.
      const double offset = (2.0 * static_cast<double>(j) - 1.0 - m) / (2.0 * m);
      out.rows[rows[j - 1]].time_s = base + resolution * offset;
    }
  }

  // Distinct recorded times occupy disjoint open intervals, so collisions can
  // only come from rounding. Enforce strict distinctness anyway.
  std::vector<std::size_t> order(out.rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.rows[a].time_s < out.rows[b].time_s;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    double& cur = out.rows[order[i]].time_s;
    const double prev = out.rows[order[i - 1]].time_s;
    if (cur <= prev) {
      const double before = cur;
      cur = std::nextafter(prev, std::numeric_limits<double>::infinity());
      warn(warnings, "smooth_ties: smoothed time " + format_double(before) + " in row " +
                         std::to_string(order[i] + 1) + " collided; perturbed to " +
                         format_double(cur));
    }
  }
  return out;
}

double to_speed(double time_s, double distance_m) {
  if (!(time_s > 0.0)) throw std::domain_error("to_speed: time must be positive");
  if (!(distance_m > 0.0)) throw std::domain_error("to_speed: distance must be positive");
  return 3.6 * distance_m / time_s;
}

double to_time(double speed_kmh, double distance_m) {
  if (!(speed_kmh > 0.0)) throw std::domain_error("to_time: speed must be positive");
  if (!(distance_m > 0.0)) throw std::domain_error("to_time: distance must be positive");
  return 3.6 * distance_m / speed_kmh;
}

SpeedSample group(const RecordTable& table, double distance_m) {
  std::map<std::string, std::vector<double>> by_athlete;
  for (const auto& row : table.rows) {
    by_athlete[row.athlete_id].push_back(to_speed(row.time_s, distance_m));
  }
  SpeedSample s;
  for (auto& [id, speeds] : by_athlete) {
    s.group_offsets.push_back(s.values.size());
    s.group_sizes.push_back(speeds.size());
    s.athlete_ids.push_back(id);
    s.values.insert(s.values.end(), speeds.begin(), speeds.end());
  }
  return s;
}

SpeedSample prepare_for_lambda(const SpeedSample& sample, SingletonPolicy policy,
                               Warnings* warnings) {
  SpeedSample out;
  std::size_t singletons = 0;
  for (std::size_t l = 0; l < sample.p(); ++l) {
    const auto block = sample.group(l);
    if (block.size() == 1) {
      ++singletons;
      if (policy == SingletonPolicy::drop) continue;
    }
    out.group_offsets.push_back(out.values.size());
    out.values.insert(out.values.end(), block.begin(), block.end());
    if (block.size() == 1) out.values.push_back(block.front());
    out.group_sizes.push_back(out.values.size() - out.group_offsets.back());
    if (!sample.athlete_ids.empty()) out.athlete_ids.push_back(sample.athlete_ids[l]);
  }
  if (singletons > 0) {
    warn(warnings, std::to_string(singletons) + " athlete(s) with a single record " +
                       (policy == SingletonPolicy::drop ? "dropped" : "duplicated") +
                       " for heterogeneity estimation");
  }
  return out;
}

SingletonPolicy parse_singleton_policy(const std::string& name) {
  if (name == "drop") return SingletonPolicy::drop;
  if (name == "duplicate") return SingletonPolicy::duplicate;
  throw std::invalid_argument("unknown singleton policy '" + name + "' (expected drop|duplicate)");
}

std::string to_string(SingletonPolicy policy) {
  return policy == SingletonPolicy::drop ? "drop" : "duplicate";
}

}  // namespace hevt
