#include "hevt/sample.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hevt/csv.hpp"
#include "hevt/errors.hpp"

namespace hevt {

std::size_t SpeedSample::min_group_size() const noexcept {
  if (group_sizes.empty()) return 0;
  return *std::min_element(group_sizes.begin(), group_sizes.end());
}

void SpeedSample::validate() const {
  if (group_offsets.size() != group_sizes.size()) {
    throw std::invalid_argument("SpeedSample: group_offsets and group_sizes differ in length");
  }
  if (!athlete_ids.empty() && athlete_ids.size() != group_sizes.size()) {
    throw std::invalid_argument("SpeedSample: athlete_ids must be empty or one per group");
  }
  std::size_t expected = 0;
  for (std::size_t l = 0; l < group_sizes.size(); ++l) {
    if (group_sizes[l] == 0) throw std::invalid_argument("SpeedSample: empty group");
    if (group_offsets[l] != expected) {
      throw std::invalid_argument("SpeedSample: groups do not partition the values");
    }
    expected += group_sizes[l];
  }
  if (expected != values.size()) {
    throw std::invalid_argument("SpeedSample: group sizes do not sum to n");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument("SpeedSample: values must be finite and positive");
    }
  }
}

SpeedSample SpeedSample::from_groups(const std::vector<std::vector<double>>& groups) {
  SpeedSample s;
  for (const auto& g : groups) {
    s.group_offsets.push_back(s.values.size());
    s.group_sizes.push_back(g.size());
    s.values.insert(s.values.end(), g.begin(), g.end());
  }
  s.validate();
  return s;
}

void to_json(nlohmann::json& j, const SpeedSample& sample) {
  j = nlohmann::json{{"values", sample.values},
                     {"group_offsets", sample.group_offsets},
                     {"group_sizes", sample.group_sizes}};
  if (!sample.athlete_ids.empty()) j["athlete_ids"] = sample.athlete_ids;
}

void from_json(const nlohmann::json& j, SpeedSample& sample) {
  j.at("values").get_to(sample.values);
  j.at("group_offsets").get_to(sample.group_offsets);
  j.at("group_sizes").get_to(sample.group_sizes);
  sample.athlete_ids.clear();
  if (j.contains("athlete_ids")) j.at("athlete_ids").get_to(sample.athlete_ids);
  sample.validate();
}

SpeedSample read_sample_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open sample file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    return j.get<SpeedSample>();
  } catch (const nlohmann::json::exception& e) {
    throw IngestError("malformed sample JSON " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IngestError("invalid sample " + path.string() + ": " + e.what());
  }
}

std::string sample_json_text(const SpeedSample& sample) {
  return nlohmann::json(sample).dump(1) + '\n';
}

std::string sample_values_csv(const SpeedSample& sample) {
  std::string out = "value\n";
  for (double v : sample.values) out += format_double(v) + '\n';
  return out;
}

std::string sample_groups_csv(const SpeedSample& sample) {
  std::string out = "athlete_id,offset,size\n";
  for (std::size_t l = 0; l < sample.p(); ++l) {
    const std::string id = sample.athlete_ids.empty() ? std::to_string(l) : sample.athlete_ids[l];
    out += csv_row({id, std::to_string(sample.group_offsets[l]),
                    std::to_string(sample.group_sizes[l])}) +
           '\n';
  }
  return out;
}

void write_sample_json(const SpeedSample& sample, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << sample_json_text(sample);
}

void write_sample_csv_pair(const SpeedSample& sample, const std::filesystem::path& values_csv,
                           const std::filesystem::path& groups_csv) {
  std::ofstream values(values_csv);
  std::ofstream groups(groups_csv);
  if (!values || !groups) throw std::runtime_error("cannot write sample CSV pair");
  values << sample_values_csv(sample);
  groups << sample_groups_csv(sample);
}

namespace {

template <typename T>
T parse_number(const std::string& cell, const std::string& where) {
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw IngestError("malformed number '" + cell + "' at " + where);
  }
  return value;
}

}  // namespace

SpeedSample read_sample_csv_pair(const std::filesystem::path& values_csv,
                                 const std::filesystem::path& groups_csv) {
  std::ifstream values(values_csv);
  std::ifstream groups(groups_csv);
  if (!values) throw IngestError("cannot open " + values_csv.string());
  if (!groups) throw IngestError("cannot open " + groups_csv.string());
  SpeedSample s;
  std::string line;
  std::getline(values, line);
  for (std::size_t row = 1; std::getline(values, line); ++row) {
    if (line.empty()) continue;
    s.values.push_back(parse_number<double>(line, values_csv.string() + " row " + std::to_string(row)));
  }
  std::getline(groups, line);
  for (std::size_t row = 1; std::getline(groups, line); ++row) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = groups_csv.string() + " row " + std::to_string(row);
    if (cells.size() != 3) throw IngestError("expected 3 columns at " + where);
    s.athlete_ids.push_back(cells[0]);
    s.group_offsets.push_back(parse_number<std::size_t>(cells[1], where));
    s.group_sizes.push_back(parse_number<std::size_t>(cells[2], where));
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw IngestError(e.what());
  }
  return s;
}

}  // namespace hevt
