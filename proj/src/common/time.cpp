#include "urbanloop/common/time.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace urbanloop {

namespace {

namespace chr = std::chrono;

std::optional<int> parse_int(std::string_view s)
{
    int value = 0;
    if (s.empty())
        return std::nullopt;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        return std::nullopt;
    return value;
}

std::optional<Timestamp> make_utc(int y, int mo, int d, int h, int mi, int sec, int offset_seconds)
{
    const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                  chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60)
        return std::nullopt;
    const auto days = chr::sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * seconds_per_day + h * 3600 + mi * 60 + sec -
           offset_seconds;
}

// "+0000", "-0500", "+05:30", "Z"
std::optional<int> parse_offset(std::string_view s)
{
    if (s == "Z" || s == "z")
        return 0;
    if (s.size() < 5 || (s[0] != '+' && s[0] != '-'))
        return std::nullopt;
    std::string_view digits = s.substr(1);
    std::string compact;
    for (char c : digits)
        if (c != ':')
            compact.push_back(c);
    if (compact.size() != 4)
        return std::nullopt;
    auto hh = parse_int(std::string_view(compact).substr(0, 2));
    auto mm = parse_int(std::string_view(compact).substr(2, 2));
    if (!hh || !mm)
        return std::nullopt;
    const int off = *hh * 3600 + *mm * 60;
    return s[0] == '-' ? -off : off;
}

std::optional<Timestamp> parse_foursquare(std::string_view s)
{
    // Www Mmm DD HH:MM:SS +zzzz YYYY
    static constexpr std::array<std::string_view, 12> months = {
        "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    std::array<std::string_view, 6> parts{};
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < s.size() && n < parts.size()) {
        while (pos < s.size() && s[pos] == ' ')
            ++pos;
        std::size_t end = s.find(' ', pos);
        if (end == std::string_view::npos)
            end = s.size();
        if (end > pos)
            parts[n++] = s.substr(pos, end - pos);
        pos = end;
    }
    if (n != 6 || s.find_first_not_of(' ', pos) != std::string_view::npos)
        return std::nullopt;
    int month = 0;
    for (std::size_t i = 0; i < months.size(); ++i)
        if (parts[1] == months[i])
            month = static_cast<int>(i) + 1;
    const auto day = parse_int(parts[2]);
    const auto year = parse_int(parts[5]);
    const auto offset = parse_offset(parts[4]);
    const std::string_view hms = parts[3];
    if (month == 0 || !day || !year || !offset || hms.size() != 8 || hms[2] != ':' ||
        hms[5] != ':')
        return std::nullopt;
    const auto h = parse_int(hms.substr(0, 2));
    const auto mi = parse_int(hms.substr(3, 2));
    const auto sec = parse_int(hms.substr(6, 2));
    if (!h || !mi || !sec)
        return std::nullopt;
    return make_utc(*year, month, *day, *h, *mi, *sec, *offset);
}

std::optional<Timestamp> parse_iso(std::string_view s)
{
    // YYYY-MM-DD[T ]HH:MM:SS[Z|+hh:mm]
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
        s[13] != ':' || s[16] != ':')
        return std::nullopt;
    const auto y = parse_int(s.substr(0, 4));
    const auto mo = parse_int(s.substr(5, 2));
    const auto d = parse_int(s.substr(8, 2));
    const auto h = parse_int(s.substr(11, 2));
    const auto mi = parse_int(s.substr(14, 2));
    const auto sec = parse_int(s.substr(17, 2));
    if (!y || !mo || !d || !h || !mi || !sec)
        return std::nullopt;
    int offset = 0;
    if (s.size() > 19) {
        auto off = parse_offset(s.substr(19));
        if (!off)
            return std::nullopt;
        offset = *off;
    }
    return make_utc(*y, *mo, *d, *h, *mi, *sec, offset);
}

} // namespace

Timestamp days_to_seconds(double days)
{
    return static_cast<Timestamp>(std::llround(days * static_cast<double>(seconds_per_day)));
}

std::optional<Timestamp> parse_timestamp(std::string_view text)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() &&
           (text.back() == ' ' || text.back() == '\t' || text.back() == '\r' || text.back() == '\n'))
        text.remove_suffix(1);
    if (text.empty())
        return std::nullopt;

    if (auto iso = parse_iso(text))
        return iso;
    if (auto fsq = parse_foursquare(text))
        return fsq;

    Timestamp epoch = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), epoch);
    if (ec == std::errc{} && ptr == text.data() + text.size())
        return epoch;
    return std::nullopt;
}

std::string format_iso8601(Timestamp t)
{
    Timestamp days = t / seconds_per_day;
    Timestamp rem = t % seconds_per_day;
    if (rem < 0) {
        rem += seconds_per_day;
        --days;
    }
    const chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60),
                  static_cast<int>(rem % 60));
    return buf;
}

} // namespace urbanloop
