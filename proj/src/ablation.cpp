#include "gridlag/ablation.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gridlag/csv.hpp"
#include "gridlag/errors.hpp"

namespace gridlag::ablation {

Preset parse_preset(std::string_view name) {
    if (name == "proposed") return Preset::proposed;
    if (name == "recent-adjacent" || name == "recent_adjacent") return Preset::recent_adjacent;
    if (name == "fixed-period" || name == "fixed_period") return Preset::fixed_period;
    throw ConfigError(fmt::format("unknown preset '{}' (expected proposed, recent-adjacent or fixed-period)", name));
}

std::string_view to_string(Preset p) noexcept {
    switch (p) {
        case Preset::proposed: return "proposed";
        case Preset::recent_adjacent: return "recent-adjacent";
        case Preset::fixed_period: return "fixed-period";
    }
    return "?";
}

std::size_t default_depth(split::Horizon h) noexcept { return h == split::Horizon::next_hour ? 18 : 9; }

std::vector<int> preset_lags(Preset p, split::Horizon h, std::size_t n, const lagrank::LagRanking* ranking) {
    if (n == 0) throw ConfigError("a preset needs at least one lag");
    std::vector<int> lags;
    const bool hourly = h == split::Horizon::next_hour;
    switch (p) {
        case Preset::proposed:
            if (!ranking) throw ConfigError("the 'proposed' preset requires a ranking file (run rank-lags first)");
            lags = lagrank::top_k(*ranking, n);
            for (int lag : lags)
                if (lag < split::min_lag(h))
                    throw ConfigError(fmt::format("ranked lag {} is not admissible for the {} horizon", lag,
                                                  split::to_string(h)));
            return lags;
        case Preset::recent_adjacent:
            for (std::size_t i = 0; i < n; ++i) lags.push_back(static_cast<int>(i) + (hourly ? 1 : 24));
            return lags;
        case Preset::fixed_period:
            for (std::size_t i = 0; i < n; ++i)
                lags.push_back(hourly ? 1 + 24 * static_cast<int>(i) : 24 * static_cast<int>(i + 1));
            return lags;
    }
    return lags;
}

namespace {

void check_context(const RunContext& ctx) {
    if (!ctx.series || !ctx.trainer) throw ConfigError("run context lacks a series or trainer");
    if (ctx.train.empty()) throw DataError("no training targets");
    if (ctx.eval.empty()) throw DataError("no evaluation targets");
}

predict::Evaluation train_and_evaluate(std::span<const int> lags, const RunContext& ctx) {
    const auto model = ctx.trainer->fit(*ctx.series, ctx.train, lags);
    return predict::evaluate(*model, ctx.eval, *ctx.series, ctx.eval_cfg, ctx.threads);
}

}  // namespace

Comparison compare_configs(std::span<const NamedLags> configs, const RunContext& ctx) {
    check_context(ctx);
    if (configs.size() < 2) throw ConfigError("comparison needs at least two configurations");
    Comparison c;
    for (const auto& cfg : configs) c.configs.push_back({cfg, train_and_evaluate(cfg.lags, ctx)});
    for (std::size_t i = 0; i < c.configs.size(); ++i)
        for (std::size_t j = i + 1; j < c.configs.size(); ++j) {
            const auto a = c.configs[i].evaluation.mse();
            const auto b = c.configs[j].evaluation.mse();
            c.pairs.push_back(stats::paired_test(a, b, c.configs[i].config.name, c.configs[j].config.name, ctx.alpha));
        }
    stats::apply_holm(c.pairs, ctx.alpha);
    return c;
}

std::string Comparison::winner(const stats::PairedTestResult& pair) const {
    if (!pair.reject) return {};
    return pair.mean_a < pair.mean_b ? pair.label_a : pair.label_b;
}

const DepthResult& AblationResult::at_channels(std::size_t channels) const {
    for (const auto& d : depths)
        if (d.channels == channels) return d;
    throw DataError(fmt::format("no ablation result with {} channels", channels));
}

AblationResult ablate_depth(const lagrank::LagRanking& ranking, std::size_t n_max, const RunContext& ctx,
                            double margin_fraction, std::size_t n_min) {
    check_context(ctx);
    if (n_max < 2) throw ConfigError("ablation needs n_max >= 2");
    if (n_min < 1 || n_min > n_max) throw ConfigError("ablation needs 1 <= n_min <= n_max");
    if (n_max > ranking.rows.size())
        throw ConfigError(fmt::format("n_max {} exceeds the {} ranked lags", n_max, ranking.rows.size()));
    AblationResult res;
    res.margin_fraction = margin_fraction;
    const auto best_first = ranking.ordered_lags();
    for (std::size_t n = n_max; n >= n_min; --n) {
        DepthResult d;
        d.lags_per_type = n;
        d.channels = 2 * n;
        d.lags.assign(best_first.begin(), best_first.begin() + static_cast<std::ptrdiff_t>(n));
        std::sort(d.lags.begin(), d.lags.end());
        d.evaluation = train_and_evaluate(d.lags, ctx);
        res.depths.push_back(std::move(d));
        if (n == 1) break;
    }
    // Lowest mean MSE; ties go to fewer channels.
    std::size_t best = 0;
    for (std::size_t i = 1; i < res.depths.size(); ++i)
        if (res.depths[i].evaluation.mean.mse <= res.depths[best].evaluation.mean.mse) best = i;
    res.min_mse_channels = res.depths[best].channels;

    std::vector<stats::PairedTestResult> family;
    std::vector<std::size_t> members;
    const auto ref = res.depths[best].evaluation.mse();
    for (std::size_t i = best + 1; i < res.depths.size(); ++i) {
        family.push_back(stats::non_inferiority(res.depths[i].evaluation.mse(), ref, margin_fraction, ctx.alpha,
                                                fmt::format("{}ch", res.depths[i].channels),
                                                fmt::format("{}ch", res.min_mse_channels)));
        members.push_back(i);
    }
    stats::apply_holm(family, ctx.alpha);
    res.minimal_ni_channels = res.min_mse_channels;
    for (std::size_t k = 0; k < family.size(); ++k) {
        auto& d = res.depths[members[k]];
        d.ni = family[k];
        if (family[k].reject) res.minimal_ni_channels = std::min(res.minimal_ni_channels, d.channels);
    }
    return res;
}

void write_comparison_csv(std::ostream& out, const Comparison& c) {
    out << "pair,config_a,config_b,mean_mse_a,mean_mse_b,statistic,p_raw,p_adjusted,decision,better,n_effective,"
           "normality_p,note\n";
    for (const auto& p : c.pairs) {
        csv::write_row(out, {fmt::format("{} vs {}", p.label_a, p.label_b), p.label_a, p.label_b, csv::num(p.mean_a),
                             csv::num(p.mean_b), csv::num(p.statistic), csv::num(p.p_raw), csv::num(p.p_adjusted),
                             p.reject ? "reject" : "retain", c.winner(p), std::to_string(p.n_effective),
                             p.normality_p ? csv::num(*p.normality_p) : "", p.error.value_or("")});
    }
}

void write_comparison_text(std::ostream& out, const Comparison& c) {
    out << "Configuration summary (evaluation subset)\n";
    out << fmt::format("{:<18} {:>5}  {:>12} {:>10} {:>10} {:>10}  {}\n", "config", "ch", "MSE", "MAE", "MaxAE", "R2",
                       "lags");
    for (const auto& r : c.configs) {
        const auto& m = r.evaluation.mean;
        out << fmt::format("{:<18} {:>5}  {:>12.5f} {:>10.5f} {:>10.5f} {:>10.5f}  {{{}}}\n", r.config.name,
                           2 * r.config.lags.size(), m.mse, m.mae, m.max_ae, m.r2, fmt::join(r.config.lags, ", "));
    }
    out << "\nPairwise two-sided signed-rank tests (Holm family of " << c.pairs.size() << ")\n";
    for (const auto& p : c.pairs) {
        out << fmt::format("{} vs {}: p_raw={:.4g} p_holm={:.4g} -> {}", p.label_a, p.label_b, p.p_raw, p.p_adjusted,
                           p.reject ? fmt::format("significant, better: {}", c.winner(p)) : "not significant");
        if (p.error) out << " [" << *p.error << "]";
        out << '\n';
    }
}

void write_ablation_csv(std::ostream& out, const AblationResult& a) {
    out << "channels,lags_per_type,lags,mean_val_mse,ni_margin,ni_p_raw,ni_p_adjusted,ni_decision,min_mse,minimal_ni\n";
    for (const auto& d : a.depths) {
        csv::write_row(out, {std::to_string(d.channels), std::to_string(d.lags_per_type),
                             fmt::format("{}", fmt::join(d.lags, " ")), csv::num(d.evaluation.mean.mse),
                             d.ni ? csv::num(d.ni->margin) : "", d.ni ? csv::num(d.ni->p_raw) : "",
                             d.ni ? csv::num(d.ni->p_adjusted) : "",
                             d.ni ? (d.ni->reject ? "non-inferior" : "not-non-inferior") : "",
                             d.channels == a.min_mse_channels ? "1" : "0",
                             d.channels == a.minimal_ni_channels ? "1" : "0"});
    }
}

void write_ablation_text(std::ostream& out, const AblationResult& a) {
    const auto& best = a.at_channels(a.min_mse_channels);
    const auto& ni = a.at_channels(a.minimal_ni_channels);
    out << "Optimal historical input configuration\n";
    out << fmt::format("minimum-MSE depth: {} channels (mean val MSE {:.5f}), lags {{{}}}\n", best.channels,
                       best.evaluation.mean.mse, fmt::join(best.lags, ", "));
    out << fmt::format("minimal non-inferior depth: {} channels (mean val MSE {:.5f}), lags {{{}}}\n", ni.channels,
                       ni.evaluation.mean.mse, fmt::join(ni.lags, ", "));
    out << fmt::format("non-inferiority margin: {:.4g} x mean MSE of the minimum-MSE depth\n", a.margin_fraction);
    for (const auto& d : a.depths) {
        if (!d.ni) continue;
        out << fmt::format("  {:>3} ch: delta={:.5g} p_raw={:.4g} p_holm={:.4g} -> {}\n", d.channels, d.ni->margin,
                           d.ni->p_raw, d.ni->p_adjusted, d.ni->reject ? "non-inferior" : "not non-inferior");
    }
}

}  // namespace gridlag::ablation
