#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace urbanloop {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp seconds_per_day = 86400;

/// Converts a (possibly fractional) day count to whole seconds.
Timestamp days_to_seconds(double days);

/// Parses a UTC instant. Accepted forms:
///   "Tue Apr 03 18:00:09 +0000 2012"   (Foursquare dump format)
///   "2012-04-03T18:00:09Z", "2012-04-03 18:00:09", "...+hh:mm"
///   "1333476009"                       (integer epoch seconds)
/// Returns nullopt when the text matches none of them.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

} // namespace urbanloop
