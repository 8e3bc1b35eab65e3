#pragma once

// Small text helpers shared by the CSV/JSON emitters.

#include <string>
#include <string_view>
#include <vector>

namespace nfas {

/// Shortest representation that round-trips to the same double.
[[nodiscard]] std::string format_double(double v);

/// Splits one CSV record on commas and trims surrounding whitespace.
/// Quoted fields are not supported.
[[nodiscard]] std::vector<std::string> split_csv_line(std::string_view line);

[[nodiscard]] std::string trim(std::string_view s);

}  // namespace nfas
