#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hevt {

/// Splits one CSV record. Supports double-quoted fields with "" escapes;
/// surrounding whitespace of unquoted fields is trimmed.
std::vector<std::string> split_csv_line(std::string_view line);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

/// Joins already formatted cells with commas.
std::string csv_row(const std::vector<std::string>& cells);

}  // namespace hevt
