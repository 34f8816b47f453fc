#include "gridlag/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "gridlag/csv.hpp"
#include "gridlag/errors.hpp"
#include "gridlag/geojson.hpp"
#include "gridlag/parallel.hpp"

namespace gridlag::synth {

std::array<double, 24> SynthConfig::default_profile() {
    // Quiet nights, a morning shoulder and an evening peak; mean 1.
    std::array<double, 24> p{};
    for (int h = 0; h < 24; ++h) {
        const double x = h;
        p[static_cast<std::size_t>(h)] =
            0.15 + 0.8 * std::exp(-(x - 8.5) * (x - 8.5) / 6.0) + 1.4 * std::exp(-(x - 17.5) * (x - 17.5) / 10.0);
    }
    const double m = std::accumulate(p.begin(), p.end(), 0.0) / 24.0;
    for (auto& v : p) v /= m;
    return p;
}

void SynthConfig::validate() const {
    if (weeks < 1) throw ConfigError("weeks must be at least 1");
    if (weekly_amp > 0.0 && weeks < 2) throw ConfigError("a weekly harmonic needs at least 2 weeks");
    if (tract_rows < 1 || tract_cols < 1) throw ConfigError("tract layout must be at least 1 x 1");
    if (tract_count() > 999999) throw ConfigError("too many tracts");
    if (!(tract_size_deg > 0.0)) throw ConfigError("tract size must be positive");
    if (!(base_rate >= 0.0)) throw ConfigError("base rate must be nonnegative");
    if (!(daily_amp >= 0.0 && daily_amp <= 1.0)) throw ConfigError("daily amplitude must lie in [0, 1]");
    if (!(weekly_amp >= 0.0 && weekly_amp <= 1.0)) throw ConfigError("weekly amplitude must lie in [0, 1]");
    if (!(phase_spread >= 0.0) || !(weight_spread >= 0.0)) throw ConfigError("spreads must be nonnegative");
    for (double v : profile)
        if (!(v >= 0.0)) throw ConfigError("hour-of-day profile values must be nonnegative");
    if (!(drift_sd >= 0.0)) throw ConfigError("drift sd must be nonnegative");
    if (!(drift_persistence >= 0.0 && drift_persistence < 1.0)) throw ConfigError("drift persistence must lie in [0, 1)");
    if (!(stay_probability >= 0.0 && stay_probability <= 1.0)) throw ConfigError("stay probability must lie in [0, 1]");
    if (!(min_duration_min >= 1.0 && max_duration_min <= 120.0 && min_duration_min < max_duration_min))
        throw ConfigError("durations must satisfy 1 <= min < max <= 120 minutes");
    if (!(min_speed_kmh >= 2.0 && max_speed_kmh <= 26.0 && min_speed_kmh < max_speed_kmh))
        throw ConfigError("speeds must satisfy 2 <= min < max <= 26 km/h");
    if (min_speed_kmh * min_duration_min / 60.0 < 0.1 || max_speed_kmh * max_duration_min / 60.0 > 35.0)
        throw ConfigError("duration and speed ranges imply distances outside [0.1, 35] km");
    if (geoid_prefix.empty() || !std::all_of(geoid_prefix.begin(), geoid_prefix.end(), [](char c) {
            return c >= '0' && c <= '9';
        }))
        throw ConfigError("GEOID prefix must be digits");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double base_intensity(const SynthConfig& cfg, double weight, double phase, std::int64_t hour) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double h = static_cast<double>(hour);
    return cfg.base_rate * weight * cfg.profile[static_cast<std::size_t>(hour % 24)] *
           (1.0 + cfg.daily_amp * std::cos(two_pi * h / 24.0 + phase)) *
           (1.0 + cfg.weekly_amp * std::cos(two_pi * h / 168.0));
}

namespace {

geo::Ring square(double west, double north, double size) {
    return {{west, north - size}, {west + size, north - size}, {west + size, north}, {west, north}, {west, north - size}};
}

}  // namespace

SynthData generate(const SynthConfig& cfg) {
    cfg.validate();
    SynthData data;
    data.hours = cfg.hours();
    const std::size_t tracts = cfg.tract_count();
    const auto range = cfg.range();

    for (int r = 0; r < cfg.tract_rows; ++r)
        for (int c = 0; c < cfg.tract_cols; ++c) {
            const auto index = static_cast<std::size_t>(r * cfg.tract_cols + c);
            data.tracts.push_back(geo::TractPolygon::single(
                fmt::format("{}{:06d}", cfg.geoid_prefix, (index + 1) * 100),
                {square(cfg.west_lon + c * cfg.tract_size_deg, cfg.north_lat - r * cfg.tract_size_deg,
                        cfg.tract_size_deg)}));
        }
    const double pad = 0.25 * cfg.tract_size_deg;
    data.boundary = geo::TractPolygon::single(
        "boundary", {square(cfg.west_lon - pad, cfg.north_lat + pad,
                            std::max(cfg.tract_rows, cfg.tract_cols) * cfg.tract_size_deg + 2 * pad)});

    // Tract weights and phases from the master stream.
    std::vector<double> weight(tracts), phase(tracts);
    {
        std::mt19937_64 rng(mix_seed(cfg.seed, 0));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (std::size_t k = 0; k < tracts; ++k) {
            weight[k] = std::exp(cfg.weight_spread * gauss(rng));
            phase[k] = cfg.phase_spread * unit(rng);
        }
        const double m = std::accumulate(weight.begin(), weight.end(), 0.0) / static_cast<double>(tracts);
        for (auto& w : weight) w /= m;
    }

    std::vector<std::uint8_t> missing(static_cast<std::size_t>(data.hours));
    for (std::int64_t h = 0; h < data.hours; ++h) {
        const auto t = range.hour_start(h);
        missing[static_cast<std::size_t>(h)] = is_nonexistent_hour(t.day, t.hour(), cfg.dst) ? 1 : 0;
    }

    data.rates.assign(tracts * static_cast<std::size_t>(data.hours), 0.0);
    std::vector<std::vector<SynthTrip>> per_tract(tracts);
    parallel_for(tracts, 0, [&](std::size_t k) {
        std::mt19937_64 rng(mix_seed(cfg.seed, k + 1));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const int row = static_cast<int>(k) / cfg.tract_cols, col = static_cast<int>(k) % cfg.tract_cols;
        std::vector<std::size_t> neighbours;
        for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
            const int nr = row + dr, nc = col + dc;
            if (nr >= 0 && nr < cfg.tract_rows && nc >= 0 && nc < cfg.tract_cols)
                neighbours.push_back(static_cast<std::size_t>(nr * cfg.tract_cols + nc));
        }
        const double s = cfg.drift_sd, rho = cfg.drift_persistence;
        double drift = s > 0.0 ? s * gauss(rng) : 0.0;
        auto& out = per_tract[k];
        for (std::int64_t h = 0; h < data.hours; ++h) {
            if (h > 0 && h % 24 == 0 && s > 0.0) drift = rho * drift + std::sqrt(1.0 - rho * rho) * s * gauss(rng);
            const auto slot = static_cast<std::size_t>(h);
            double lambda = missing[slot] ? 0.0 : base_intensity(cfg, weight[k], phase[k], h);
            if (s > 0.0) lambda *= std::exp(drift - 0.5 * s * s);
            data.rates[k * static_cast<std::size_t>(data.hours) + slot] = lambda;
            if (lambda <= 0.0) continue;
            const int count = std::poisson_distribution<int>(lambda)(rng);
            const bool next_missing = slot + 1 < missing.size() && missing[slot + 1];
            const auto hour_start = range.hour_start(h);
            for (int i = 0; i < count; ++i) {
                SynthTrip t;
                t.origin = k;
                t.dest = (neighbours.empty() || unit(rng) < cfg.stay_probability)
                             ? k
                             : neighbours[static_cast<std::size_t>(unit(rng) * static_cast<double>(neighbours.size())) %
                                          neighbours.size()];
                const double minutes = cfg.min_duration_min + unit(rng) * (cfg.max_duration_min - cfg.min_duration_min);
                const double speed = cfg.min_speed_kmh + unit(rng) * (cfg.max_speed_kmh - cfg.min_speed_kmh);
                t.duration_s = std::llround(minutes * 60.0);
                t.distance_m = std::llround(speed * (static_cast<double>(t.duration_s) / 3600.0) * 1000.0);
                // Trips just before a skipped clock hour must end before it.
                const std::int64_t latest = next_missing ? 3599 - t.duration_s : 3599;
                const auto offset = static_cast<std::int64_t>(unit(rng) * static_cast<double>(latest + 1));
                t.start = LocalDateTime::from_epoch_seconds(hour_start.epoch_seconds() + std::min(offset, latest));
                t.end = LocalDateTime::from_epoch_seconds(t.start.epoch_seconds() + t.duration_s);
                out.push_back(t);
            }
        }
    });
    std::size_t total = 0;
    for (const auto& v : per_tract) total += v.size();
    data.trips.reserve(total);
    for (auto& v : per_tract) data.trips.insert(data.trips.end(), v.begin(), v.end());
    std::stable_sort(data.trips.begin(), data.trips.end(), [](const SynthTrip& a, const SynthTrip& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.origin < b.origin;
    });
    return data;
}

void write_trips_csv(std::ostream& out, const SynthData& data) {
    out << "ID,Device ID,Vehicle Type,Trip Duration,Trip Distance,Start Time,End Time,Year,"
           "Census Tract Start,Census Tract End\n";
    std::size_t id = 0;
    for (const auto& t : data.trips) {
        ++id;
        out << fmt::format("syn{:08d},dev{:04d},scooter,{},{},{},{},{},{},{}\n", id, (t.origin * 37 + id) % 5000,
                           t.duration_s, t.distance_m, format_us(t.start), format_us(t.end), t.start.year(),
                           data.tracts[t.origin].geoid, data.tracts[t.dest].geoid);
    }
}

void write_tracts_geojson(std::ostream& out, const SynthData& data) { geojson::write_polygons(out, data.tracts); }

void write_boundary_geojson(std::ostream& out, const SynthData& data) {
    geojson::write_polygons(out, std::span(&data.boundary, 1), "NAME");
}

std::vector<geo::LocatedTrip> locate(const SynthData& data, const geo::ProjectionSpec& spec) {
    const geo::TransverseMercator tm(spec);
    std::vector<geo::UtmPoint> centre;
    for (const auto& poly : data.tracts) {
        const auto c = geo::polygon_centroid(poly);
        centre.push_back(tm.forward(c.lat, c.lon));
    }
    std::vector<geo::LocatedTrip> out;
    out.reserve(data.trips.size());
    for (const auto& t : data.trips) out.push_back({t.start, t.end, centre[t.origin], centre[t.dest]});
    return out;
}

}  // namespace gridlag::synth
