#include "gridlag/split.hpp"

#include <cmath>
#include <charconv>
#include <limits>

#include <fmt/format.h>

#include "gridlag/csv.hpp"
#include "gridlag/errors.hpp"

namespace gridlag::split {

Horizon parse_horizon(std::string_view name) {
    if (name == "next-hour" || name == "next_hour" || name == "1h") return Horizon::next_hour;
    if (name == "next-24h" || name == "next_24h" || name == "24h" || name == "next-24-hour") return Horizon::next_24h;
    throw ConfigError(fmt::format("unknown horizon '{}' (expected next-hour or next-24h)", name));
}

std::string_view to_string(Horizon h) noexcept { return h == Horizon::next_hour ? "next-hour" : "next-24h"; }

int min_lag(Horizon h) noexcept { return h == Horizon::next_hour ? 1 : 24; }

std::string_view to_string(Subset s) noexcept {
    switch (s) {
        case Subset::train: return "train";
        case Subset::val: return "val";
        case Subset::test: return "test";
    }
    return "?";
}

Subset parse_subset(std::string_view name) {
    if (name == "train") return Subset::train;
    if (name == "val" || name == "validation") return Subset::val;
    if (name == "test") return Subset::test;
    throw ConfigError(fmt::format("unknown subset '{}'", name));
}

void SplitSpec::validate() const {
    if (lookback < 1) throw ConfigError("lookback must be at least 1 hour");
    if (buffer < 0) throw ConfigError("buffer must be nonnegative");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) throw ConfigError("split fractions must be nonnegative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(fmt::format("split fractions sum to {}, not 1", sum));
}

std::optional<std::int64_t> SplitAssignment::first_target(Subset s) const {
    const auto& v = (*this)[s];
    if (v.empty()) return std::nullopt;
    return v.front().target;
}

std::optional<std::int64_t> SplitAssignment::last_target(Subset s) const {
    const auto& v = (*this)[s];
    if (v.empty()) return std::nullopt;
    return v.back().target;
}

std::size_t SplitAssignment::total() const noexcept {
    return subsets[0].size() + subsets[1].size() + subsets[2].size();
}

std::vector<std::int64_t> SplitAssignment::targets(Subset s) const {
    std::vector<std::int64_t> out;
    out.reserve((*this)[s].size());
    for (const auto& x : (*this)[s]) out.push_back(x.target);
    return out;
}

std::vector<SampleIndex> enumerate_samples(std::int64_t total_hours, std::int64_t lookback, Horizon horizon) {
    if (lookback < 1) throw ConfigError("lookback must be at least 1 hour");
    if (total_hours <= lookback)
        throw ConfigError(
            fmt::format("{} hours cannot host a {}-hour lookback (need more than {})", total_hours, lookback, lookback));
    std::vector<SampleIndex> out;
    out.reserve(static_cast<std::size_t>(total_hours - lookback));
    for (auto t = lookback; t < total_hours; ++t) out.push_back({t, horizon});
    return out;
}

SplitAssignment split_samples(std::span<const SampleIndex> candidates, const SplitSpec& spec) {
    spec.validate();
    SplitAssignment a;
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < 3; ++k)
        if (spec.fractions[k] > 0.0) active.push_back(k);
    const auto gap_drop = static_cast<std::size_t>(spec.lookback + spec.buffer - 1);
    const std::size_t dropped = (active.size() - 1) * gap_drop;
    if (candidates.size() < dropped + active.size())
        throw DataError(fmt::format("{} candidate samples cannot host {} subsets separated by {} hours",
                                    candidates.size(), active.size(), spec.lookback + spec.buffer));
    const std::size_t usable = candidates.size() - dropped;

    std::size_t pos = 0, assigned = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
        const auto k = active[i];
        std::size_t n = i + 1 == active.size()
                            ? usable - assigned
                            : static_cast<std::size_t>(std::floor(spec.fractions[k] * static_cast<double>(usable) + 1e-9));
        n = std::min(n, usable - assigned);
        a.subsets[k].assign(candidates.begin() + static_cast<std::ptrdiff_t>(pos),
                            candidates.begin() + static_cast<std::ptrdiff_t>(pos + n));
        assigned += n;
        pos += n + gap_drop;
    }
    for (const auto k : active)
        if (a.subsets[k].empty())
            throw DataError(fmt::format("subset '{}' would be empty; range too short", to_string(Subset(k))));
    return a;
}

SplitAssignment split_at(std::span<const SampleIndex> candidates, const SplitSpec& spec, std::int64_t val_first,
                         std::int64_t test_first) {
    spec.validate();
    const auto sep = spec.lookback + spec.buffer;
    if (test_first - val_first < sep) throw ConfigError("test block must start at least L + buffer after validation");
    SplitAssignment a;
    for (const auto& s : candidates) {
        if (s.target <= val_first - sep) a[Subset::train].push_back(s);
        else if (s.target >= val_first && s.target <= test_first - sep) a[Subset::val].push_back(s);
        else if (s.target >= test_first) a[Subset::test].push_back(s);
    }
    for (auto s : kSubsets)
        if (a[s].empty()) throw DataError(fmt::format("boundary split leaves subset '{}' empty", to_string(s)));
    return a;
}

LeakageReport verify_no_leakage(const SplitAssignment& a, std::int64_t lookback) {
    LeakageReport r;
    std::optional<std::int64_t> prev_last;
    std::int64_t min_gap = std::numeric_limits<std::int64_t>::max();
    for (auto s : kSubsets) {
        const auto& v = a[s];
        if (v.empty()) continue;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i].target <= v[i - 1].target) r.pass = false;
        if (prev_last) {
            const auto gap = v.front().target - *prev_last;
            r.gaps.push_back(gap);
            min_gap = std::min(min_gap, gap);
            if (gap < lookback + 1) r.pass = false;
        }
        prev_last = v.back().target;
    }
    r.margin = r.gaps.empty() ? 0 : min_gap - (lookback + 1);
    return r;
}

void exclude_missing_windows(SplitAssignment& a, std::span<const std::uint8_t> missing, std::int64_t lookback) {
    std::vector<std::int64_t> prefix(missing.size() + 1, 0);
    for (std::size_t i = 0; i < missing.size(); ++i) prefix[i + 1] = prefix[i] + (missing[i] ? 1 : 0);
    for (auto& v : a.subsets) {
        std::erase_if(v, [&](const SampleIndex& s) {
            const auto lo = std::max<std::int64_t>(s.target - lookback, 0);
            const auto hi = std::min<std::int64_t>(s.target, static_cast<std::int64_t>(missing.size()));
            return hi > lo && prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)] > 0;
        });
    }
}

void write_split_csv(std::ostream& out, const SplitAssignment& a, const DayRange& range) {
    out << "subset,target_hour_index,target_timestamp\n";
    for (auto s : kSubsets)
        for (const auto& x : a[s])
            out << to_string(s) << ',' << x.target << ',' << format_iso(range.hour_start(x.target)) << '\n';
}

SplitAssignment read_split_csv(std::istream& in, Horizon horizon) {
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() < 2 || row[0] != "subset") throw DataError("split file: unexpected header");
    SplitAssignment a;
    while (reader.next(row)) {
        if (row.size() < 2) throw DataError(fmt::format("split file line {}: too few fields", reader.line()));
        Subset s;
        try {
            s = parse_subset(row[0]);
        } catch (const ConfigError&) {
            throw DataError(fmt::format("split file line {}: unknown subset '{}'", reader.line(), row[0]));
        }
        std::int64_t t = 0;
        const auto [p, ec] = std::from_chars(row[1].data(), row[1].data() + row[1].size(), t);
        if (ec != std::errc{} || p != row[1].data() + row[1].size())
            throw DataError(fmt::format("split file line {}: bad target index '{}'", reader.line(), row[1]));
        a[s].push_back({t, horizon});
    }
    return a;
}

}  // namespace gridlag::split
