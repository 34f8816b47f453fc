#include <doctest.h>

#include <sstream>

#include "gridlag/ablation.hpp"
#include "gridlag/errors.hpp"
#include "planted.hpp"

using namespace gridlag;
using ablation::Preset;
using split::Horizon;

namespace {

lagrank::LagRanking ranking_for(const mask::MaskedSeries& s, std::span<const std::int64_t> train, int max_lag,
                                int min_lag = 1) {
    auto lags = lagrank::lag_universe(min_lag, max_lag);
    return lagrank::rank_lags(lagrank::lag_metrics(s, train, lags));
}

std::vector<std::int64_t> range(std::int64_t first, std::int64_t last) {
    std::vector<std::int64_t> out;
    for (auto t = first; t < last; ++t) out.push_back(t);
    return out;
}

}  // namespace

TEST_CASE("baseline presets reproduce the published lag sets") {
    CHECK(ablation::default_depth(Horizon::next_hour) == 18);
    CHECK(ablation::default_depth(Horizon::next_24h) == 9);

    std::vector<int> adjacent_hour;
    for (int k = 1; k <= 18; ++k) adjacent_hour.push_back(k);
    CHECK(ablation::preset_lags(Preset::recent_adjacent, Horizon::next_hour, 18) == adjacent_hour);
    CHECK(ablation::preset_lags(Preset::fixed_period, Horizon::next_hour, 18) ==
          std::vector<int>{1, 25, 49, 73, 97, 121, 145, 169, 193, 217, 241, 265, 289, 313, 337, 361, 385, 409});
    CHECK(ablation::preset_lags(Preset::recent_adjacent, Horizon::next_24h, 9) ==
          std::vector<int>{24, 25, 26, 27, 28, 29, 30, 31, 32});
    CHECK(ablation::preset_lags(Preset::fixed_period, Horizon::next_24h, 9) ==
          std::vector<int>{24, 48, 72, 96, 120, 144, 168, 192, 216});

    CHECK_THROWS_AS((void)ablation::preset_lags(Preset::proposed, Horizon::next_hour, 18), ConfigError);
    CHECK_THROWS_AS((void)ablation::preset_lags(Preset::fixed_period, Horizon::next_hour, 0), ConfigError);
    for (auto p : {Preset::proposed, Preset::recent_adjacent, Preset::fixed_period})
        CHECK(ablation::parse_preset(ablation::to_string(p)) == p);
    CHECK_THROWS_AS((void)ablation::parse_preset("weekly"), ConfigError);
}

TEST_CASE("the proposed preset takes the top of the ranking") {
    auto s = testing::thinned_series(24 * 14, 12, 5);
    auto train = range(200, 336);
    auto r = ranking_for(s, train, 48);
    auto lags = ablation::preset_lags(Preset::proposed, Horizon::next_hour, 3, &r);
    CHECK(lags == lagrank::top_k(r, 3));
    CHECK(std::find(lags.begin(), lags.end(), 24) != lags.end());
    // Lags below 24 cannot serve a next-24h forecast.
    CHECK_THROWS_AS((void)ablation::preset_lags(Preset::proposed, Horizon::next_24h, 40, &r), ConfigError);
    auto daily = ranking_for(s, train, 60, 24);
    CHECK_NOTHROW((void)ablation::preset_lags(Preset::proposed, Horizon::next_24h, 5, &daily));
}

TEST_CASE("comparisons test every pair in one Holm family") {
    auto s = testing::thinned_series(24 * 20, 10, 8);
    predict::LinearTrainer trainer;
    ablation::RunContext ctx;
    ctx.series = &s;
    ctx.trainer = &trainer;
    ctx.train = range(100, 350);
    ctx.eval = range(350, 480);
    std::vector<ablation::NamedLags> configs{{"daily", {24}}, {"recent", {1, 2}}, {"mixed", {1, 24}}, {"far", {5, 9}}};
    auto c = ablation::compare_configs(configs, ctx);
    REQUIRE(c.pairs.size() == 6);
    std::vector<double> raw;
    for (const auto& p : c.pairs) raw.push_back(p.p_raw);
    auto holm = stats::holm_correct(raw);
    for (std::size_t i = 0; i < 6; ++i) CHECK(c.pairs[i].p_adjusted == holm.adjusted[i]);
    CHECK(c.pairs[0].label_a == "daily");
    CHECK(c.pairs[0].label_b == "recent");
    CHECK(c.winner(c.pairs[0]) == "daily");
    CHECK(c.configs[0].evaluation.samples.size() == ctx.eval.size());

    std::ostringstream csv, text;
    ablation::write_comparison_csv(csv, c);
    ablation::write_comparison_text(text, c);
    CHECK(csv.str().rfind("pair,config_a,config_b", 0) == 0);
    CHECK(text.str().find("Holm family of 6") != std::string::npos);

    std::vector<ablation::NamedLags> one{{"daily", {24}}};
    CHECK_THROWS_AS((void)ablation::compare_configs(one, ctx), ConfigError);
}

TEST_CASE("identical configurations surface a degenerate note") {
    auto s = testing::thinned_series(24 * 10, 6, 2);
    predict::LinearTrainer trainer;
    ablation::RunContext ctx{&s, &trainer, range(50, 180), range(180, 240)};
    std::vector<ablation::NamedLags> twins{{"a", {24}}, {"b", {24}}};
    auto c = ablation::compare_configs(twins, ctx);
    REQUIRE(c.pairs.size() == 1);
    REQUIRE(c.pairs[0].error.has_value());
    CHECK(c.pairs[0].error->find("identical") != std::string::npos);
    CHECK(c.pairs[0].p_adjusted == 1.0);
    CHECK(c.winner(c.pairs[0]).empty());
}

TEST_CASE("ablation keeps the single informative lag") {
    auto s = testing::thinned_series(24 * 40, 16, 42);
    predict::LinearTrainer trainer;
    ablation::RunContext ctx;
    ctx.series = &s;
    ctx.trainer = &trainer;
    ctx.train = range(24 * 3, 24 * 28);
    ctx.eval = range(24 * 28, 24 * 40);
    auto r = ranking_for(s, ctx.train, 72);
    CHECK(r.ordered_lags().front() == 24);

    auto a = ablation::ablate_depth(r, 4, ctx);
    REQUIRE(a.depths.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a.depths[i].lags_per_type == 4 - i);
        CHECK(a.depths[i].channels == 2 * (4 - i));
    }
    CHECK(a.at_channels(2).lags == std::vector<int>{24});
    CHECK(a.minimal_ni_channels == 2);
    CHECK(a.minimal_ni_channels <= a.min_mse_channels);
    const double best = a.at_channels(a.min_mse_channels).evaluation.mean.mse;
    CHECK(a.at_channels(2).evaluation.mean.mse <= 1.02 * best);

    // Depths shallower than the minimum-MSE depth carry NI results; deeper ones do not.
    for (const auto& d : a.depths) CHECK(d.ni.has_value() == (d.channels < a.min_mse_channels));

    auto again = ablation::ablate_depth(r, 4, ctx);
    CHECK(again.min_mse_channels == a.min_mse_channels);
    CHECK(again.at_channels(2).evaluation.mean.mse == a.at_channels(2).evaluation.mean.mse);

    std::ostringstream csv, text;
    ablation::write_ablation_csv(csv, a);
    ablation::write_ablation_text(text, a);
    CHECK(csv.str().rfind("channels,lags_per_type", 0) == 0);
    CHECK(text.str().find("minimal non-inferior depth: 2 channels") != std::string::npos);

    CHECK_THROWS_AS((void)ablation::ablate_depth(r, 1, ctx), ConfigError);
    CHECK_THROWS_AS((void)ablation::ablate_depth(r, 100, ctx), ConfigError);
    CHECK_THROWS_AS((void)ablation::ablate_depth(r, 4, ctx, 0.02, 5), ConfigError);
    CHECK_THROWS_AS((void)a.at_channels(3), DataError);
}

TEST_CASE("ablation without an informative shallow depth stays at the minimum-MSE depth") {
    // Hand-built ranking whose best lag is useless while the second carries the signal.
    auto s = testing::thinned_series(24 * 30, 12, 9);
    predict::LinearTrainer trainer;
    ablation::RunContext ctx{&s, &trainer, range(100, 500), range(500, 720)};
    std::vector<lagrank::LagMetrics> rows(3);
    rows[0].lag = 7;
    rows[0].same_corr = 0.9;
    rows[1].lag = 24;
    rows[1].same_corr = 0.5;
    rows[2].lag = 11;
    rows[2].same_corr = 0.1;
    std::vector<lagrank::Metric> use{lagrank::Metric::same_corr};
    auto r = lagrank::rank_lags(rows, use);
    auto a = ablation::ablate_depth(r, 3, ctx);
    CHECK(a.min_mse_channels >= 4);
    CHECK(a.minimal_ni_channels >= 4);
    REQUIRE(a.at_channels(2).ni.has_value());
    CHECK_FALSE(a.at_channels(2).ni->reject);
}
