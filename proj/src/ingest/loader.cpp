#include "urbanloop/ingest/loader.hpp"

#include "urbanloop/common/csv.hpp"
#include "urbanloop/common/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace urbanloop {

namespace {

struct RawRow
{
    std::string user;
    std::string venue;
    std::string category;
    LatLon position;
    std::int16_t tz_offset = 0;
    Timestamp time = 0;
};

bool starts_with_nocase(std::string_view text, std::string_view prefix)
{
    if (text.size() < prefix.size())
        return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(text[i])) != prefix[i])
            return false;
    return true;
}

std::string trim(std::string s)
{
    auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && blank(s.back()))
        s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && blank(s[i]))
        ++i;
    return s.substr(i);
}

// Returns an error message, or empty on success.
std::string parse_row(const std::vector<std::string>& f, CheckinFormat format, RawRow& row)
{
    std::size_t lat_col = 0;
    std::size_t lon_col = 0;
    std::size_t time_col = 0;
    if (format == CheckinFormat::foursquare) {
        if (f.size() != 8)
            return "expected 8 columns, found " + std::to_string(f.size());
        row.category = trim(f[3]);
        lat_col = 4;
        lon_col = 5;
        time_col = 7;
        const std::string tz = trim(f[6]);
        int offset = 0;
        auto [ptr, ec] = std::from_chars(tz.data(), tz.data() + tz.size(), offset);
        if (tz.empty() || ec != std::errc{} || ptr != tz.data() + tz.size() || offset < -1440 ||
            offset > 1440)
            return "unparsable timezone offset '" + tz + "'";
        row.tz_offset = static_cast<std::int16_t>(offset);
    } else {
        if (f.size() != 6)
            return "expected 6 columns, found " + std::to_string(f.size());
        row.category = f[2];
        lat_col = 3;
        lon_col = 4;
        time_col = 5;
    }
    row.user = trim(f[0]);
    row.venue = trim(f[1]);
    if (row.user.empty() || row.venue.empty())
        return "empty user or venue id";
    if (row.category.empty())
        return "empty category";

    const auto lat = csv::parse_double(f[lat_col]);
    const auto lon = csv::parse_double(f[lon_col]);
    if (!lat || !lon)
        return "unparsable coordinates";
    row.position = {*lat, *lon};
    if (!valid_position(row.position))
        return "coordinates out of range";

    const auto t = parse_timestamp(f[time_col]);
    if (!t)
        return "unparsable timestamp '" + f[time_col] + "'";
    row.time = *t;
    return {};
}

} // namespace

Dataset read_checkins(std::istream& in, const LoadOptions& options, LoadReport* report)
{
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    rep = LoadReport{};

    std::optional<char> delimiter = options.delimiter;
    if (options.format == CheckinFormat::canonical)
        delimiter = delimiter.value_or(',');

    std::vector<RawRow> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first_record = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (!delimiter)
            delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
        if (first_record) {
            first_record = false;
            if (starts_with_nocase(line, "user"))
                continue;
        }

        ++rep.rows_read;
        RawRow row;
        const std::string error = parse_row(csv::split(line, *delimiter), options.format, row);
        if (!error.empty()) {
            const std::string message = "line " + std::to_string(line_no) + ": " + error;
            if (options.policy == MalformedRowPolicy::fail)
                throw DataError(message);
            ++rep.rows_skipped;
            if (rep.sample_errors.size() < 10)
                rep.sample_errors.push_back(message);
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (in.bad())
        throw DataError("read error while loading check-ins");
    rep.rows_loaded = rows.size();

    std::unordered_map<std::string, std::size_t> first_seen;
    std::vector<Venue> venues;
    std::vector<std::string> user_ids;
    for (const RawRow& r : rows) {
        if (first_seen.emplace(r.venue, venues.size()).second)
            venues.push_back(Venue{r.venue, r.category, std::nullopt, r.position});
        user_ids.push_back(r.user);
    }
    auto catalog = std::make_shared<const Catalog>(std::move(venues));
    auto users = std::make_shared<const UserTable>(std::move(user_ids));

    std::vector<VisitEvent> events;
    events.reserve(rows.size());
    for (const RawRow& r : rows)
        events.push_back(
            VisitEvent{*users->find(r.user), *catalog->find(r.venue), r.time, r.tz_offset});
    std::stable_sort(events.begin(), events.end(),
                     [](const VisitEvent& a, const VisitEvent& b) { return a.time < b.time; });
    return Dataset(std::move(catalog), std::move(users), std::move(events));
}

Dataset load_checkins(const std::filesystem::path& path, const LoadOptions& options,
                      LoadReport* report)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open check-in file " + path.string());
    return read_checkins(in, options, report);
}

void write_canonical(const Dataset& data, std::ostream& out)
{
    out << "user_id,venue_id,category,lat,lon,timestamp_iso8601\n";
    for (const VisitEvent& e : data.events()) {
        const Venue& v = data.venue_of(e);
        out << csv::escape(data.user_id(e)) << ',' << csv::escape(v.id) << ','
            << csv::escape(v.category) << ',' << csv::format_double(v.position.lat) << ','
            << csv::format_double(v.position.lon) << ',' << format_iso8601(e.time) << '\n';
    }
}

void write_canonical(const Dataset& data, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    write_canonical(data, out);
}

CategoryHierarchy read_category_hierarchy(std::istream& in)
{
    CategoryHierarchy map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const char delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
        auto fields = csv::split(line, delimiter);
        if (fields.size() != 2)
            throw DataError("category hierarchy line " + std::to_string(line_no) +
                            ": expected 2 columns");
        std::string child = trim(fields[0]);
        std::string parent = trim(fields[1]);
        if (line_no == 1 && starts_with_nocase(child, "second"))
            continue;
        if (child.empty() || parent.empty())
            throw DataError("category hierarchy line " + std::to_string(line_no) +
                            ": empty label");
        auto [it, inserted] = map.emplace(child, parent);
        if (!inserted && it->second != parent)
            throw DataError("category '" + child + "' mapped to both '" + it->second + "' and '" +
                            parent + "'");
    }
    return map;
}

CategoryHierarchy load_category_hierarchy(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path))
        return {};
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open category hierarchy " + path.string());
    return read_category_hierarchy(in);
}

Dataset apply_hierarchy(const Dataset& data, const CategoryHierarchy& hierarchy)
{
    std::vector<Venue> venues = data.catalog().venues();
    for (Venue& v : venues) {
        auto it = hierarchy.find(v.category);
        v.first_level_category =
            it == hierarchy.end() ? std::nullopt : std::optional<std::string>(it->second);
    }
    // Ids are unchanged, so the sorted order and every index survive.
    std::vector<VisitEvent> events(data.events().begin(), data.events().end());
    return Dataset(std::make_shared<const Catalog>(std::move(venues)), data.users_ptr(),
                   std::move(events));
}

} // namespace urbanloop
