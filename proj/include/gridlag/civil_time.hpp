#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gridlag {

using Days = std::chrono::sys_days;

/// Naive local wall-clock time. No timezone is attached; arithmetic is plain
/// calendar arithmetic on the wall clock.
struct LocalDateTime {
    Days day{};
    std::int32_t second_of_day = 0;  // 0 .. 86399

    [[nodiscard]] int year() const;
    [[nodiscard]] int hour() const noexcept { return second_of_day / 3600; }
    /// Seconds since 1970-01-01 00:00 on the naive wall clock.
    [[nodiscard]] std::int64_t epoch_seconds() const noexcept;

    static LocalDateTime from_epoch_seconds(std::int64_t s);

    friend auto operator<=>(const LocalDateTime&, const LocalDateTime&) = default;
};

[[nodiscard]] Days make_day(int year, unsigned month, unsigned day);

/// Accepts "YYYY-MM-DD HH:MM[:SS[.fff]]" (space or 'T' separator) and
/// "MM/DD/YYYY hh:mm[:ss] [AM|PM]".
[[nodiscard]] std::optional<LocalDateTime> parse_timestamp(std::string_view text);
[[nodiscard]] std::optional<Days> parse_date(std::string_view text);  // YYYY-MM-DD or YYYYMMDD

[[nodiscard]] std::string format_iso(const LocalDateTime& t);  // YYYY-MM-DD HH:MM:SS
[[nodiscard]] std::string format_us(const LocalDateTime& t);   // MM/DD/YYYY hh:mm:ss AM
[[nodiscard]] std::string format_date(Days d);                 // YYYY-MM-DD
[[nodiscard]] std::string format_compact_date(Days d);         // YYYYMMDD

/// Rule for clock hours that are skipped at the spring daylight-saving change.
enum class DstRule { none, us };

[[nodiscard]] DstRule parse_dst_rule(std::string_view name);

/// True when hour `hour` of `day` never appears on a local clock (US rule:
/// 02:00-02:59 on the second Sunday of March).
[[nodiscard]] bool is_nonexistent_hour(Days day, int hour, DstRule rule);

/// Half-open calendar-day range [first, first + days).
struct DayRange {
    Days first{};
    std::int32_t days = 0;

    [[nodiscard]] std::int64_t hours() const noexcept { return std::int64_t{days} * 24; }
    /// Absolute hour index of (day, hour), or -1 when outside the range.
    [[nodiscard]] std::int64_t hour_index(Days day, int hour) const noexcept;
    [[nodiscard]] std::int64_t hour_index(const LocalDateTime& t) const noexcept {
        return hour_index(t.day, t.hour());
    }
    [[nodiscard]] LocalDateTime hour_start(std::int64_t index) const noexcept;

    static DayRange calendar_year(int year);
    static DayRange inclusive(Days first, Days last);
};

}  // namespace gridlag
