#pragma once

#include "urbanloop/ingest/dataset.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace urbanloop {

enum class CheckinFormat
{
    /// user_id, venue_id, category_id, category_name, lat, lon,
    /// tz_offset_minutes, utc_time (tab- or comma-separated, no header).
    foursquare,
    /// Header row, then user_id,venue_id,category,lat,lon,timestamp_iso8601.
    canonical,
};

enum class MalformedRowPolicy
{
    skip_and_count,
    fail,
};

struct LoadOptions
{
    CheckinFormat format = CheckinFormat::foursquare;
    MalformedRowPolicy policy = MalformedRowPolicy::skip_and_count;
    /// Detected from the first record when unset.
    std::optional<char> delimiter;
};

struct LoadReport
{
    std::size_t rows_read = 0;
    std::size_t rows_loaded = 0;
    std::size_t rows_skipped = 0;
    /// First few rejection messages, "line N: reason".
    std::vector<std::string> sample_errors;
};

/// Reads a check-in file. Events come back sorted by timestamp (stable for
/// ties); the first row mentioning a venue fixes its coordinates and category.
/// Throws DataError if the file cannot be read, or on any rejected row under
/// MalformedRowPolicy::fail.
Dataset load_checkins(const std::filesystem::path& path, const LoadOptions& options = {},
                      LoadReport* report = nullptr);
Dataset read_checkins(std::istream& in, const LoadOptions& options = {},
                      LoadReport* report = nullptr);

/// Canonical sorted CSV: user_id,venue_id,category,lat,lon,timestamp_iso8601.
void write_canonical(const Dataset& data, std::ostream& out);
void write_canonical(const Dataset& data, const std::filesystem::path& path);

/// Second-level category -> first-level category.
using CategoryHierarchy = std::map<std::string, std::string, std::less<>>;

/// Two-column CSV (second_level,first_level). A missing file yields an empty
/// map. A second-level key listed twice with different parents is a DataError.
CategoryHierarchy load_category_hierarchy(const std::filesystem::path& path);
CategoryHierarchy read_category_hierarchy(std::istream& in);

/// Rebuilds the catalog with first-level categories taken from the map;
/// categories absent from the map get none.
Dataset apply_hierarchy(const Dataset& data, const CategoryHierarchy& hierarchy);

} // namespace urbanloop
