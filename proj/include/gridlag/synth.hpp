#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "gridlag/civil_time.hpp"
#include "gridlag/geo.hpp"

namespace gridlag::synth {

/// Synthetic trip generator with planted daily and weekly periodicity.
struct SynthConfig {
    std::uint64_t seed = 1;
    int weeks = 20;
    Days start = make_day(2019, 1, 1);
    DstRule dst = DstRule::us;

    // Pseudo-tract layout: a rows x cols block of square tracts whose
    // north-west corner sits at (west_lon, north_lat).
    int tract_rows = 8;
    int tract_cols = 8;
    double tract_size_deg = 0.01;
    double west_lon = -97.80;
    double north_lat = 30.32;
    std::string geoid_prefix = "48453";

    double base_rate = 3.0;     // trips per hour per tract before modulation
    double daily_amp = 0.8;     // in [0, 1]
    double weekly_amp = 0.5;    // in [0, 1]
    double phase_spread = std::numbers::pi;  // tract phases drawn uniformly in [-spread, spread] radians
    double weight_spread = 0.5; // log-normal sd of per-tract demand weights (0 = equal tracts)
    std::array<double, 24> profile = default_profile();  // hour-of-day shape

    // Optional extra dispersion: a per-tract day-level log-rate following an
    // AR(1) walk. It makes recent days more alike than distant ones; zero sd
    // gives pure Poisson counts.
    double drift_sd = 0.2;
    double drift_persistence = 0.95;

    double stay_probability = 0.6;  // destination in the origin tract; else a neighbour
    double min_duration_min = 3.0;
    double max_duration_min = 30.0;
    double min_speed_kmh = 5.0;
    double max_speed_kmh = 20.0;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
    [[nodiscard]] std::int64_t hours() const noexcept { return std::int64_t{weeks} * 7 * 24; }
    [[nodiscard]] DayRange range() const noexcept { return DayRange{start, weeks * 7}; }
    [[nodiscard]] std::size_t tract_count() const noexcept {
        return static_cast<std::size_t>(tract_rows) * static_cast<std::size_t>(tract_cols);
    }

    static std::array<double, 24> default_profile();
};

struct SynthTrip {
    std::size_t origin = 0;  // tract index
    std::size_t dest = 0;
    LocalDateTime start;
    LocalDateTime end;
    std::int64_t duration_s = 0;
    std::int64_t distance_m = 0;
};

struct SynthData {
    std::vector<geo::TractPolygon> tracts;
    geo::TractPolygon boundary;
    std::vector<SynthTrip> trips;  // sorted by start time, then origin tract
    /// Expected trips per (tract, hour): rates[tract * hours + hour].
    std::vector<double> rates;
    std::int64_t hours = 0;
};

/// Deterministic in the seed; tracts use independent sub-seeded streams.
[[nodiscard]] SynthData generate(const SynthConfig& cfg);

/// Rate of one tract at absolute hour h before day-level drift.
[[nodiscard]] double base_intensity(const SynthConfig& cfg, double weight, double phase, std::int64_t hour) noexcept;

/// Austin-style export: seconds, meters and "MM/DD/YYYY hh:mm:ss AM" times.
void write_trips_csv(std::ostream& out, const SynthData& data);

/// Tracts and boundary as GeoJSON FeatureCollections.
void write_tracts_geojson(std::ostream& out, const SynthData& data);
void write_boundary_geojson(std::ostream& out, const SynthData& data);

/// Trips placed at their tract centroids, bypassing the CSV round trip.
[[nodiscard]] std::vector<geo::LocatedTrip> locate(const SynthData& data, const geo::ProjectionSpec& spec = {});

/// Stateless 64-bit mixer used to derive sub-seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace gridlag::synth
