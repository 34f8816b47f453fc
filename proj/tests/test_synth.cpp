#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "gridlag/errors.hpp"
#include "gridlag/geojson.hpp"
#include "gridlag/ingest.hpp"
#include "gridlag/parallel.hpp"
#include "gridlag/raster.hpp"
#include "gridlag/synth.hpp"

using namespace gridlag;

namespace {

synth::SynthConfig small(int weeks = 2) {
    synth::SynthConfig cfg;
    cfg.weeks = weeks;
    cfg.tract_rows = 3;
    cfg.tract_cols = 4;
    return cfg;
}

std::string csv_of(const synth::SynthData& data) {
    std::ostringstream out;
    synth::write_trips_csv(out, data);
    return out.str();
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
    auto cfg = small();
    const auto a = csv_of(synth::generate(cfg));
    const auto b = csv_of(synth::generate(cfg));
    CHECK(a == b);
    cfg.seed = 2;
    CHECK(csv_of(synth::generate(cfg)) != a);
}

TEST_CASE("thread count does not change the output") {
    auto cfg = small();
    const auto many = csv_of(synth::generate(cfg));
    thread_cap() = 1;
    const auto one = csv_of(synth::generate(cfg));
    thread_cap() = 0;
    CHECK(one == many);
}

TEST_CASE("one rate per tract and hour") {
    auto cfg = small(4);
    auto data = synth::generate(cfg);
    CHECK(data.hours == 4 * 7 * 24);
    CHECK(data.rates.size() == cfg.tract_count() * 672);
    CHECK(data.tracts.size() == 12);
    for (double r : data.rates) CHECK(r >= 0.0);
    for (std::size_t i = 1; i < data.trips.size(); ++i) {
        const auto& p = data.trips[i - 1];
        const auto& q = data.trips[i];
        CHECK((p.start < q.start || (p.start == q.start && p.origin <= q.origin)));
    }
}

TEST_CASE("rates follow the harmonic intensity when drift is off") {
    auto cfg = small();
    cfg.drift_sd = 0.0;
    cfg.weight_spread = 0.0;
    cfg.phase_spread = 0.0;
    cfg.start = make_day(2019, 6, 3);  // no clock change in range
    auto data = synth::generate(cfg);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t k = 0; k < cfg.tract_count(); ++k)
        for (std::int64_t h = 0; h < data.hours; ++h) {
            const double want = cfg.base_rate * cfg.profile[static_cast<std::size_t>(h % 24)] *
                                (1.0 + cfg.daily_amp * std::cos(two_pi * static_cast<double>(h) / 24.0)) *
                                (1.0 + cfg.weekly_amp * std::cos(two_pi * static_cast<double>(h) / 168.0));
            CHECK(data.rates[k * static_cast<std::size_t>(data.hours) + static_cast<std::size_t>(h)] ==
                  doctest::Approx(want).epsilon(1e-12));
            CHECK(synth::base_intensity(cfg, 1.0, 0.0, h) == doctest::Approx(want).epsilon(1e-12));
        }
    double mean = 0;
    for (double v : cfg.profile) mean += v / 24.0;
    CHECK(mean == doctest::Approx(1.0));
}

TEST_CASE("hour-of-day counts match the summed rates") {
    auto cfg = small(3);
    cfg.daily_amp = 0.8;
    cfg.weekly_amp = 0.5;
    auto data = synth::generate(cfg);
    const auto range = cfg.range();
    std::array<double, 24> expected{}, observed{};
    for (std::size_t k = 0; k < cfg.tract_count(); ++k)
        for (std::int64_t h = 0; h < data.hours; ++h)
            expected[static_cast<std::size_t>(range.hour_start(h).hour())] +=
                data.rates[k * static_cast<std::size_t>(data.hours) + static_cast<std::size_t>(h)];
    for (const auto& t : data.trips) observed[static_cast<std::size_t>(t.start.hour())] += 1.0;
    double chi2 = 0;
    for (std::size_t i = 0; i < 24; ++i) chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    const double p = boost::math::gamma_q(12.0, chi2 / 2.0);  // 24 degrees of freedom
    CHECK(p > 0.01);
}

TEST_CASE("no trip touches the skipped spring-forward hour") {
    auto cfg = small(1);
    cfg.weekly_amp = 0.0;
    cfg.start = make_day(2019, 3, 7);
    cfg.base_rate = 20.0;
    auto data = synth::generate(cfg);
    const auto skipped = cfg.range().hour_index(make_day(2019, 3, 10), 2);
    for (std::size_t k = 0; k < cfg.tract_count(); ++k)
        CHECK(data.rates[k * static_cast<std::size_t>(data.hours) + static_cast<std::size_t>(skipped)] == 0.0);
    for (const auto& t : data.trips) {
        CHECK_FALSE(is_nonexistent_hour(t.start.day, t.start.hour(), cfg.dst));
        CHECK_FALSE(is_nonexistent_hour(t.end.day, t.end.hour(), cfg.dst));
    }
}

TEST_CASE("generated trips survive the default filters") {
    auto cfg = small();
    auto data = synth::generate(cfg);
    std::istringstream in(csv_of(data));
    auto parsed = ingest::parse_trips(in, ingest::ColumnMap{});
    CHECK(parsed.errors.empty());
    auto res = ingest::filter_trips(parsed, ingest::FilterConfig{});
    CHECK(res.report.kept == data.trips.size());
    CHECK(res.report.rejected_total() == 0);

    std::ostringstream tracts, boundary;
    synth::write_tracts_geojson(tracts, data);
    synth::write_boundary_geojson(boundary, data);
    std::istringstream tin(tracts.str()), bin(boundary.str());
    auto polys = geojson::read_polygons(tin);
    REQUIRE(polys.size() == data.tracts.size());
    CHECK(polys[0].geoid == data.tracts[0].geoid);
    CHECK(geojson::read_polygons(bin, "NAME").front().geoid == "boundary");
    for (const auto& p : data.tracts) CHECK(geo::point_in_polygon(geo::polygon_centroid(p), data.boundary));
}

TEST_CASE("every trip lands in a frame") {
    auto cfg = small();
    auto data = synth::generate(cfg);
    auto located = synth::locate(data);
    REQUIRE(located.size() == data.trips.size());
    auto grid = raster::build_grid(located);
    raster::RasterTally tally;
    auto store = raster::rasterize_range(located, grid, cfg.range(), cfg.dst, &tally);
    std::uint64_t pickups = 0, dropoffs = 0;
    for (const auto& f : store.frames()) {
        pickups += raster::total(f.pickup);
        dropoffs += raster::total(f.dropoff);
    }
    CHECK(pickups == data.trips.size());
    // Drop-offs after the last hour fall outside the range.
    CHECK(dropoffs + tally.dropoff_out_of_range == data.trips.size());
}

TEST_CASE("invalid configurations are rejected") {
    auto cfg = small();
    cfg.weeks = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.weekly_amp = 0.0;
    CHECK_NOTHROW(cfg.validate());
    cfg = small();
    cfg.daily_amp = 1.5;
    CHECK_THROWS_AS((void)synth::generate(cfg), ConfigError);
    cfg = small();
    cfg.max_duration_min = 200.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small();
    cfg.geoid_prefix = "48x";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small();
    cfg.drift_persistence = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(synth::mix_seed(1, 2) != synth::mix_seed(1, 3));
    CHECK(synth::mix_seed(1, 2) == synth::mix_seed(1, 2));
}
