#include "gridlag/civil_time.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "gridlag/errors.hpp"

namespace gridlag {

namespace {

using namespace std::chrono;

constexpr std::int64_t kSecondsPerDay = 86400;

// Consumes an unsigned integer of 1..max_digits digits.
bool take_uint(std::string_view& s, int max_digits, int& out) {
    std::size_t n = 0;
    while (n < s.size() && n < static_cast<std::size_t>(max_digits) &&
           std::isdigit(static_cast<unsigned char>(s[n])))
        ++n;
    if (n == 0) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + n, out);
    if (ec != std::errc{}) return false;
    s.remove_prefix(n);
    return true;
}

bool take_char(std::string_view& s, char c) {
    if (s.empty() || s.front() != c) return false;
    s.remove_prefix(1);
    return true;
}

void skip_spaces(std::string_view& s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
}

std::optional<Days> checked_day(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

// Parses "HH:MM[:SS[.fff]]" with an optional trailing AM/PM marker.
std::optional<int> parse_clock(std::string_view s) {
    int h = 0, mi = 0, se = 0;
    if (!take_uint(s, 2, h) || !take_char(s, ':') || !take_uint(s, 2, mi)) return std::nullopt;
    if (take_char(s, ':')) {
        if (!take_uint(s, 2, se)) return std::nullopt;
        if (take_char(s, '.')) {
            int frac = 0;
            if (!take_uint(s, 9, frac)) return std::nullopt;
        }
    }
    skip_spaces(s);
    if (!s.empty()) {
        std::string marker;
        for (char c : s) marker.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        if (marker != "AM" && marker != "PM") return std::nullopt;
        if (h < 1 || h > 12) return std::nullopt;
        if (marker == "AM" && h == 12) h = 0;
        if (marker == "PM" && h != 12) h += 12;
    }
    if (h > 23 || mi > 59 || se > 59) return std::nullopt;
    return h * 3600 + mi * 60 + se;
}

}  // namespace

int LocalDateTime::year() const {
    return static_cast<int>(year_month_day{day}.year());
}

std::int64_t LocalDateTime::epoch_seconds() const noexcept {
    return std::int64_t{day.time_since_epoch().count()} * kSecondsPerDay + second_of_day;
}

LocalDateTime LocalDateTime::from_epoch_seconds(std::int64_t s) {
    std::int64_t d = s / kSecondsPerDay;
    std::int64_t rem = s % kSecondsPerDay;
    if (rem < 0) {
        rem += kSecondsPerDay;
        --d;
    }
    return {Days{days{d}}, static_cast<std::int32_t>(rem)};
}

Days make_day(int y, unsigned m, unsigned d) {
    year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw ConfigError(fmt::format("invalid calendar date {}-{}-{}", y, m, d));
    return sys_days{ymd};
}

std::optional<LocalDateTime> parse_timestamp(std::string_view text) {
    std::string_view s = text;
    skip_spaces(s);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);

    int a = 0, b = 0, c = 0;
    std::optional<Days> day;
    if (!take_uint(s, 4, a)) return std::nullopt;
    if (take_char(s, '-')) {
        if (!take_uint(s, 2, b) || !take_char(s, '-') || !take_uint(s, 2, c)) return std::nullopt;
        day = checked_day(a, b, c);
        if (!take_char(s, 'T') && !take_char(s, ' ')) return std::nullopt;
    } else if (take_char(s, '/')) {
        if (!take_uint(s, 2, b) || !take_char(s, '/') || !take_uint(s, 4, c)) return std::nullopt;
        day = checked_day(c, a, b);
        if (!take_char(s, ' ')) return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (!day) return std::nullopt;
    skip_spaces(s);
    auto secs = parse_clock(s);
    if (!secs) return std::nullopt;
    return LocalDateTime{*day, *secs};
}

std::optional<Days> parse_date(std::string_view text) {
    std::string_view s = text;
    int y = 0, m = 0, d = 0;
    if (s.size() == 8) {
        if (!take_uint(s, 4, y) || !take_uint(s, 2, m) || !take_uint(s, 2, d) || !s.empty())
            return std::nullopt;
        return checked_day(y, m, d);
    }
    if (!take_uint(s, 4, y) || !take_char(s, '-') || !take_uint(s, 2, m) || !take_char(s, '-') ||
        !take_uint(s, 2, d) || !s.empty())
        return std::nullopt;
    return checked_day(y, m, d);
}

std::string format_iso(const LocalDateTime& t) {
    year_month_day ymd{t.day};
    int s = t.second_of_day;
    return fmt::format("{:04d}-{:02d}-{:02d} {:02d}:{:02d}:{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), s / 3600,
                       (s / 60) % 60, s % 60);
}

std::string format_us(const LocalDateTime& t) {
    year_month_day ymd{t.day};
    int s = t.second_of_day;
    int h24 = s / 3600;
    int h12 = h24 % 12 == 0 ? 12 : h24 % 12;
    return fmt::format("{:02d}/{:02d}/{:04d} {:02d}:{:02d}:{:02d} {}", static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()), static_cast<int>(ymd.year()), h12, (s / 60) % 60,
                       s % 60, h24 < 12 ? "AM" : "PM");
}

std::string format_date(Days d) {
    year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

std::string format_compact_date(Days d) {
    year_month_day ymd{d};
    return fmt::format("{:04d}{:02d}{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

DstRule parse_dst_rule(std::string_view name) {
    if (name == "none") return DstRule::none;
    if (name == "us") return DstRule::us;
    throw ConfigError(fmt::format("unknown DST rule '{}' (expected none|us)", name));
}

bool is_nonexistent_hour(Days d, int hour, DstRule rule) {
    if (rule == DstRule::none || hour != 2) return false;
    year_month_day ymd{d};
    if (ymd.month() != March) return false;
    // Second Sunday of March, the post-2007 US rule.
    sys_days second_sunday{ymd.year() / March / Sunday[2]};
    return d == second_sunday;
}

std::int64_t DayRange::hour_index(Days d, int hour) const noexcept {
    auto offset = (d - first).count();
    if (offset < 0 || offset >= days || hour < 0 || hour > 23) return -1;
    return std::int64_t{offset} * 24 + hour;
}

LocalDateTime DayRange::hour_start(std::int64_t index) const noexcept {
    return {first + std::chrono::days{index / 24}, static_cast<std::int32_t>((index % 24) * 3600)};
}

DayRange DayRange::calendar_year(int y) {
    Days a = make_day(y, 1, 1);
    Days b = make_day(y + 1, 1, 1);
    return {a, static_cast<std::int32_t>((b - a).count())};
}

DayRange DayRange::inclusive(Days first_day, Days last_day) {
    if (last_day < first_day) throw ConfigError("day range ends before it starts");
    return {first_day, static_cast<std::int32_t>((last_day - first_day).count() + 1)};
}

}  // namespace gridlag
