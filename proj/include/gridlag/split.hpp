#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "gridlag/civil_time.hpp"
#include "gridlag/errors.hpp"

namespace gridlag::split {

enum class Horizon { next_hour, next_24h };

[[nodiscard]] Horizon parse_horizon(std::string_view name);
[[nodiscard]] std::string_view to_string(Horizon h) noexcept;

/// Smallest admissible lag for a horizon (1 or 24).
[[nodiscard]] int min_lag(Horizon h) noexcept;

struct SampleIndex {
    std::int64_t target = 0;  // absolute hour index
    Horizon horizon = Horizon::next_hour;
    friend bool operator==(const SampleIndex&, const SampleIndex&) = default;
};

enum class Subset : std::size_t { train = 0, val = 1, test = 2 };
inline constexpr std::array<Subset, 3> kSubsets{Subset::train, Subset::val, Subset::test};

[[nodiscard]] std::string_view to_string(Subset s) noexcept;
[[nodiscard]] Subset parse_subset(std::string_view name);

struct SplitSpec {
    std::int64_t lookback = 504;  // maximum lag L, hours
    std::int64_t buffer = 1;      // extra separation; targets of adjacent subsets differ by L + buffer
    std::array<double, 3> fractions{3743.0 / 7248.0, 1752.0 / 7248.0, 1753.0 / 7248.0};

    /// Throws ConfigError unless L >= 1, buffer >= 0, fractions >= 0 and
    /// summing to 1 within 1e-9.
    void validate() const;
};

struct SplitAssignment {
    std::array<std::vector<SampleIndex>, 3> subsets;

    [[nodiscard]] const std::vector<SampleIndex>& operator[](Subset s) const {
        return subsets[static_cast<std::size_t>(s)];
    }
    [[nodiscard]] std::vector<SampleIndex>& operator[](Subset s) { return subsets[static_cast<std::size_t>(s)]; }
    [[nodiscard]] std::optional<std::int64_t> first_target(Subset s) const;
    [[nodiscard]] std::optional<std::int64_t> last_target(Subset s) const;
    [[nodiscard]] std::size_t total() const noexcept;
    /// Target hour indices of one subset.
    [[nodiscard]] std::vector<std::int64_t> targets(Subset s) const;
};

/// Targets L .. T-1. Throws ConfigError when T <= L.
[[nodiscard]] std::vector<SampleIndex> enumerate_samples(std::int64_t total_hours, std::int64_t lookback,
                                                         Horizon horizon = Horizon::next_hour);

/// Contiguous chronological blocks. Between consecutive nonempty subsets
/// L + buffer - 1 candidates are dropped; the remaining U candidates are
/// shared as floor(f_k * U) with the remainder going to the last nonempty
/// subset. Throws DataError when the candidates cannot host the gaps.
[[nodiscard]] SplitAssignment split_samples(std::span<const SampleIndex> candidates, const SplitSpec& spec);

/// Split with explicit first targets of the validation and test blocks.
/// Train ends L + buffer before val_first, val ends L + buffer before test_first.
[[nodiscard]] SplitAssignment split_at(std::span<const SampleIndex> candidates, const SplitSpec& spec,
                                       std::int64_t val_first, std::int64_t test_first);

struct LeakageReport {
    bool pass = true;
    /// Target gap between consecutive nonempty subsets.
    std::vector<std::int64_t> gaps;
    /// min(gap) - (L + 1); negative on failure.
    std::int64_t margin = 0;
};

/// Passes iff every pair of chronologically adjacent nonempty subsets is
/// ordered and separated by a target gap of at least L + 1.
[[nodiscard]] LeakageReport verify_no_leakage(const SplitAssignment& a, std::int64_t lookback);

/// Drops samples whose input window [t - L, t - 1] contains a flagged hour.
void exclude_missing_windows(SplitAssignment& a, std::span<const std::uint8_t> missing, std::int64_t lookback);

void write_split_csv(std::ostream& out, const SplitAssignment& a, const DayRange& range);
[[nodiscard]] SplitAssignment read_split_csv(std::istream& in, Horizon horizon = Horizon::next_hour);

}  // namespace gridlag::split
