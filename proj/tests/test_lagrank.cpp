#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gridlag/errors.hpp"
#include "gridlag/lagrank.hpp"
#include "planted.hpp"

using namespace gridlag;
using lagrank::LagMetrics;
using lagrank::Metric;

namespace {

mask::MaskedSeries random_series(std::size_t hours, std::size_t active, std::uint64_t seed) {
    mask::MaskedSeries s(hours, active);
    std::mt19937_64 rng(seed);
    std::poisson_distribution<int> draw(3.0);
    for (auto& v : s.pickup) v = draw(rng);
    for (auto& v : s.dropoff) v = draw(rng);
    return s;
}

// Continuous values, so no two lags tie on a metric.
mask::MaskedSeries smooth_series(std::size_t hours, std::size_t active, std::uint64_t seed) {
    mask::MaskedSeries s(hours, active);
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> draw(2.0, 1.5);
    for (auto& v : s.pickup) v = draw(rng);
    for (auto& v : s.dropoff) v = draw(rng);
    return s;
}

// Textbook two-pass correlation, independent of the library's running sums.
double corr(std::span<const double> a, std::span<const double> b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= a.size();
    mb /= b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

LagMetrics oracle(const mask::MaskedSeries& s, std::span<const std::int64_t> targets, int lag) {
    LagMetrics m;
    m.lag = lag;
    double same = 0, cross = 0, mae = 0, mae2 = 0, l1 = 0;
    for (auto t : targets) {
        auto pt = s.pickup_at(t), ph = s.pickup_at(t - lag);
        auto dt = s.dropoff_at(t), dh = s.dropoff_at(t - lag);
        const double cpp = corr(pt, ph), cdd = corr(dt, dh), cpd = corr(pt, dh), cdp = corr(dt, ph);
        if (!std::isnan(cpp) && !std::isnan(cdd)) {
            same += 0.5 * (cpp + cdd);
            cross += 0.5 * (cpd + cdp);
            ++m.n_same_corr;
            ++m.n_cross_corr;
        }
        double sum = 0;
        for (std::size_t i = 0; i < s.active; ++i) sum += std::abs(pt[i] - ph[i]) + std::abs(dt[i] - dh[i]);
        const double e = sum / (2.0 * s.active);
        mae += e;
        mae2 += e * e;
        l1 += sum;
    }
    const double n = targets.size();
    m.n_valid = targets.size();
    m.same_corr = m.n_same_corr ? same / m.n_same_corr : std::numeric_limits<double>::quiet_NaN();
    m.cross_corr = m.n_cross_corr ? cross / m.n_cross_corr : std::numeric_limits<double>::quiet_NaN();
    m.same_mae = mae / n;
    m.same_mae_var = mae2 / n - m.same_mae * m.same_mae;
    m.abs_diff = l1 / n;
    return m;
}

LagMetrics row(int lag, double same, double cross, double mae, double var = 0.0) {
    LagMetrics m;
    m.lag = lag;
    m.same_corr = same;
    m.cross_corr = cross;
    m.same_mae = mae;
    m.same_mae_var = var;
    return m;
}

}  // namespace

TEST_CASE("pearson basics") {
    std::vector<double> a{1, 2, 3, 5, 8, 13};
    std::vector<double> neg, shifted;
    for (double v : a) neg.push_back(-2 * v), shifted.push_back(3 * v + 7);
    CHECK(*lagrank::pearson(a, a) == doctest::Approx(1.0));
    CHECK(*lagrank::pearson(a, neg) == doctest::Approx(-1.0));
    CHECK(*lagrank::pearson(a, shifted) == doctest::Approx(1.0));

    std::vector<double> b{2, 1, 4, 3, 7, 6};
    CHECK(*lagrank::pearson(a, b) == doctest::Approx(corr(a, b)).epsilon(1e-12));

    std::vector<double> flat(6, 4.0);
    CHECK_FALSE(lagrank::pearson(a, flat).has_value());
    std::vector<double> one{1.0};
    CHECK_THROWS_AS((void)lagrank::pearson(one, one), DataError);
    CHECK_THROWS_AS((void)lagrank::pearson(a, one), DataError);
}

TEST_CASE("a planted daily repeat gives perfect same-channel scores at lag 24") {
    auto s = random_series(24 * 6, 20, 11);
    for (std::size_t t = 24; t < s.hours; ++t) {
        auto p = s.pickup_at(t), ph = s.pickup_at(t - 24);
        auto d = s.dropoff_at(t), dh = s.dropoff_at(t - 24);
        std::copy(ph.begin(), ph.end(), p.begin());
        std::copy(dh.begin(), dh.end(), d.begin());
    }
    std::vector<std::int64_t> targets;
    for (std::int64_t t = 48; t < 120; ++t) targets.push_back(t);
    std::vector<int> lags{1, 23, 24, 25};
    auto m = lagrank::lag_metrics(s, targets, lags);
    REQUIRE(m.size() == 4);
    CHECK(m[2].lag == 24);
    CHECK(m[2].same_corr == doctest::Approx(1.0));
    CHECK(m[2].same_mae == 0.0);
    CHECK(m[2].abs_diff == 0.0);
    CHECK(m[2].same_mae_var == 0.0);
    for (std::size_t i : {0u, 1u, 3u}) {
        CHECK(m[i].same_corr < 0.9);
        CHECK(m[i].same_mae > 0.5);
    }
    auto r = lagrank::rank_lags(m);
    CHECK(r.ordered_lags().front() == 24);
}

TEST_CASE("a constant offset keeps correlation at 1 and sets MAE to the offset") {
    auto s = random_series(50, 12, 5);
    for (std::size_t t = 1; t < s.hours; ++t) {
        auto p = s.pickup_at(t), ph = s.pickup_at(t - 1);
        auto d = s.dropoff_at(t), dh = s.dropoff_at(t - 1);
        for (std::size_t i = 0; i < s.active; ++i) p[i] = ph[i] + 2.0, d[i] = dh[i] + 2.0;
    }
    std::vector<std::int64_t> targets{10, 20, 30, 40};
    std::vector<int> lags{1};
    auto m = lagrank::lag_metrics(s, targets, lags).front();
    CHECK(m.same_corr == doctest::Approx(1.0));
    CHECK(m.same_mae == doctest::Approx(2.0));
    CHECK(m.same_mae_var == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.abs_diff == doctest::Approx(2.0 * 2 * 12));
}

TEST_CASE("lag metrics match a nested-loop oracle") {
    auto s = random_series(300, 25, 99);
    // A flat frame makes its instances undefined for the correlations only.
    for (auto& v : s.pickup_at(200)) v = 1.0;
    std::vector<std::int64_t> targets;
    for (std::int64_t t = 170; t < 300; t += 3) targets.push_back(t);
    std::vector<int> lags{1, 2, 5, 24, 100, 168, 170};
    auto got = lagrank::lag_metrics(s, targets, lags);
    REQUIRE(got.size() == lags.size());
    for (std::size_t i = 0; i < lags.size(); ++i) {
        CAPTURE(lags[i]);
        auto want = oracle(s, targets, lags[i]);
        CHECK(got[i].lag == want.lag);
        CHECK(got[i].same_corr == doctest::Approx(want.same_corr).epsilon(1e-10));
        CHECK(got[i].cross_corr == doctest::Approx(want.cross_corr).epsilon(1e-10));
        CHECK(got[i].same_mae == doctest::Approx(want.same_mae).epsilon(1e-12));
        CHECK(got[i].same_mae_var == doctest::Approx(want.same_mae_var).epsilon(1e-9));
        CHECK(got[i].abs_diff == doctest::Approx(want.abs_diff).epsilon(1e-12));
        CHECK(got[i].n_valid == want.n_valid);
        CHECK(got[i].n_same_corr == want.n_same_corr);
        CHECK(got[i].n_cross_corr == want.n_cross_corr);
    }
    // Target 200 is undefined at every lag.
    for (const auto& m : got) CHECK(m.n_same_corr < targets.size());
}

TEST_CASE("lag metrics do not depend on the thread count") {
    auto s = random_series(400, 30, 3);
    std::vector<std::int64_t> targets;
    for (std::int64_t t = 200; t < 400; ++t) targets.push_back(t);
    auto lags = lagrank::lag_universe(1, 200);
    auto one = lagrank::lag_metrics(s, targets, lags, 1);
    auto many = lagrank::lag_metrics(s, targets, lags, 4);
    REQUIRE(one.size() == many.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].same_corr == many[i].same_corr);
        CHECK(one[i].cross_corr == many[i].cross_corr);
        CHECK(one[i].same_mae == many[i].same_mae);
        CHECK(one[i].same_mae_var == many[i].same_mae_var);
    }
}

TEST_CASE("lag metrics reject bad input") {
    auto s = random_series(100, 10, 1);
    std::vector<std::int64_t> targets{50, 60};
    std::vector<int> zero{0}, too_far{51}, fine{50};
    CHECK_THROWS_AS((void)lagrank::lag_metrics(s, targets, zero), ConfigError);
    CHECK_THROWS_AS((void)lagrank::lag_metrics(s, targets, too_far), ConfigError);
    CHECK_NOTHROW((void)lagrank::lag_metrics(s, targets, fine));
    std::vector<std::int64_t> none;
    CHECK_THROWS_AS((void)lagrank::lag_metrics(s, none, fine), DataError);
    auto tiny = random_series(100, 1, 1);
    CHECK_THROWS_AS((void)lagrank::lag_metrics(tiny, targets, fine), DataError);
}

TEST_CASE("ranking orders by average rank") {
    // Lag 3 dominates on every metric; lag 1 is worst on every metric.
    std::vector<LagMetrics> rows{row(1, 0.1, 0.0, 5.0), row(2, 0.5, 0.3, 3.0), row(3, 0.9, 0.6, 1.0)};
    auto r = lagrank::rank_lags(rows);
    CHECK(r.ordered_lags() == std::vector<int>{3, 2, 1});
    CHECK(r.rank_avg[2] == 1.0);
    CHECK(r.rank_avg[0] == 3.0);
    CHECK(r.rank_final == std::vector<std::size_t>{3, 2, 1});
    CHECK(lagrank::top_k(r, 2) == std::vector<int>{2, 3});
    CHECK_THROWS_AS((void)lagrank::top_k(r, 4), ConfigError);
}

TEST_CASE("ties share the average rank and NaN ranks last") {
    std::vector<LagMetrics> rows{row(5, 0.9, 0.2, 1.0), row(6, 0.4, 0.2, 2.0), row(7, 0.4, 0.2, 3.0),
                                row(8, std::numeric_limits<double>::quiet_NaN(), 0.2, 0.5)};
    std::vector<Metric> use{Metric::same_corr};
    auto r = lagrank::rank_lags(rows, use);
    CHECK(r.ranks[0] == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    // Equal rank sums fall back to the MAE variance, then the smaller lag.
    CHECK(r.ordered_lags() == std::vector<int>{5, 6, 7, 8});
    rows[2].same_mae_var = -1.0;
    r = lagrank::rank_lags(rows, use);
    CHECK(r.ordered_lags() == std::vector<int>{5, 7, 6, 8});

    std::vector<Metric> cross{Metric::cross_corr};
    r = lagrank::rank_lags(rows, cross);
    CHECK(r.ranks[0] == std::vector<double>{2.5, 2.5, 2.5, 2.5});
}

TEST_CASE("ranking needs two lags and a metric") {
    std::vector<LagMetrics> one{row(1, 0.5, 0.5, 1.0)};
    CHECK_THROWS_AS((void)lagrank::rank_lags(one), ConfigError);
    std::vector<LagMetrics> two{row(1, 0.5, 0.5, 1.0), row(2, 0.5, 0.5, 1.0)};
    std::vector<Metric> none;
    CHECK_THROWS_AS((void)lagrank::rank_lags(two, none), ConfigError);
}

TEST_CASE("metric names and ranking CSV round trip") {
    for (auto m : {Metric::same_corr, Metric::cross_corr, Metric::same_mae, Metric::abs_diff})
        CHECK(lagrank::parse_metric(lagrank::to_string(m)) == m);
    CHECK_THROWS_AS((void)lagrank::parse_metric("rmse"), ConfigError);
    CHECK(lagrank::higher_is_better(Metric::same_corr));
    CHECK_FALSE(lagrank::higher_is_better(Metric::same_mae));

    auto s = random_series(200, 8, 17);
    std::vector<std::int64_t> targets{100, 150, 199};
    auto lags = lagrank::lag_universe(1, 30);
    auto r = lagrank::rank_lags(lagrank::lag_metrics(s, targets, lags));
    std::stringstream io;
    lagrank::write_ranking_csv(io, r);
    auto back = lagrank::read_ranking_csv(io);
    CHECK(back.metrics == r.metrics);
    CHECK(back.ordered_lags() == r.ordered_lags());
    REQUIRE(back.rows.size() == r.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& a = r.rows[i];
        auto it = std::find_if(back.rows.begin(), back.rows.end(), [&](const LagMetrics& m) { return m.lag == a.lag; });
        REQUIRE(it != back.rows.end());
        CHECK(it->same_corr == doctest::Approx(a.same_corr).epsilon(1e-12));
        CHECK(it->same_mae == doctest::Approx(a.same_mae).epsilon(1e-12));
        CHECK(it->n_valid == a.n_valid);
    }
    CHECK(lagrank::lag_universe(3, 5) == std::vector<int>{3, 4, 5});
    CHECK_THROWS_AS((void)lagrank::lag_universe(0, 5), ConfigError);
}

TEST_CASE("ranks depend only on the order of each metric") {
    auto s = smooth_series(300, 10, 41);
    std::vector<std::int64_t> targets{150, 200, 250, 299};
    auto lags = lagrank::lag_universe(1, 60);
    auto rows = lagrank::lag_metrics(s, targets, lags);
    auto base = lagrank::rank_lags(rows);
    for (auto& m : rows) {
        m.same_corr = std::exp(3.0 * m.same_corr) - 7.0;
        m.same_mae = std::sqrt(m.same_mae) * 100.0;
    }
    auto moved = lagrank::rank_lags(rows);
    CHECK(moved.ranks == base.ranks);
    CHECK(moved.ordered_lags() == base.ordered_lags());
}

TEST_CASE("absolute difference and MAE give the same order") {
    auto s = smooth_series(400, 14, 8);
    std::vector<std::int64_t> targets;
    for (std::int64_t t = 200; t < 400; t += 7) targets.push_back(t);
    auto lags = lagrank::lag_universe(1, 150);
    auto rows = lagrank::lag_metrics(s, targets, lags);
    for (const auto& m : rows) CHECK(m.abs_diff == doctest::Approx(2.0 * 14 * m.same_mae).epsilon(1e-12));
    std::vector<lagrank::Metric> mae{Metric::same_mae}, ad{Metric::abs_diff};
    CHECK(lagrank::rank_lags(rows, mae).ranks == lagrank::rank_lags(rows, ad).ranks);
}

TEST_CASE("a planted daily signal outranks every non-daily lag") {
    auto s = testing::thinned_series(24 * 30, 16, 7);
    std::vector<std::int64_t> targets;
    for (std::int64_t t = 168; t < 24 * 30; ++t) targets.push_back(t);
    auto lags = lagrank::lag_universe(1, 168);
    auto r = lagrank::rank_lags(lagrank::lag_metrics(s, targets, lags));
    const auto order = r.ordered_lags();
    const auto pos24 = std::find(order.begin(), order.end(), 24) - order.begin();
    for (std::size_t k = 0; k < order.size(); ++k)
        if (order[k] % 24 != 0) CHECK(static_cast<std::ptrdiff_t>(k) > pos24);
    CHECK(order.front() == 24);
}
