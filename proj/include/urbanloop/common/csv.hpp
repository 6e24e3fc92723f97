#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urbanloop::csv {

/// Splits one record. Double-quoted fields may contain the delimiter and
/// doubled quotes ("") as an escaped quote. A trailing '\r' is dropped.
std::vector<std::string> split(std::string_view line, char delimiter);

/// Quotes a field only when it contains the delimiter, a quote, or a newline.
std::string escape(std::string_view field, char delimiter = ',');

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);

} // namespace urbanloop::csv
