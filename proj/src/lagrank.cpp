#include "gridlag/lagrank.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "gridlag/csv.hpp"
#include "gridlag/errors.hpp"
#include "gridlag/parallel.hpp"
#include "gridlag/ranks.hpp"

namespace gridlag::lagrank {

std::string_view to_string(Metric m) noexcept {
    switch (m) {
        case Metric::same_corr: return "same_corr";
        case Metric::cross_corr: return "cross_corr";
        case Metric::same_mae: return "same_mae";
        case Metric::abs_diff: return "abs_diff";
    }
    return "?";
}

Metric parse_metric(std::string_view name) {
    for (auto m : {Metric::same_corr, Metric::cross_corr, Metric::same_mae, Metric::abs_diff})
        if (name == to_string(m)) return m;
    throw ConfigError(fmt::format("unknown metric '{}' (expected same_corr, cross_corr, same_mae or abs_diff)", name));
}

bool higher_is_better(Metric m) noexcept { return m == Metric::same_corr || m == Metric::cross_corr; }

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("pearson: length mismatch");
    if (a.size() < 2) throw DataError("pearson: need at least two values");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - ma, y = b[i] - mb;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double LagMetrics::score(Metric m) const noexcept {
    switch (m) {
        case Metric::same_corr: return same_corr;
        case Metric::cross_corr: return cross_corr;
        case Metric::same_mae: return same_mae;
        case Metric::abs_diff: return abs_diff;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

struct HourMoments {
    std::vector<double> mean_p, mean_d, ss_p, ss_d;
};

HourMoments moments(const mask::MaskedSeries& s, std::span<const std::int64_t> hours_needed) {
    HourMoments h;
    h.mean_p.assign(s.hours, 0.0);
    h.mean_d.assign(s.hours, 0.0);
    h.ss_p.assign(s.hours, 0.0);
    h.ss_d.assign(s.hours, 0.0);
    const double n = static_cast<double>(s.active);
    for (auto t : hours_needed) {
        const auto u = static_cast<std::size_t>(t);
        const auto p = s.pickup_at(t);
        const auto d = s.dropoff_at(t);
        const double mp = std::accumulate(p.begin(), p.end(), 0.0) / n;
        const double md = std::accumulate(d.begin(), d.end(), 0.0) / n;
        double sp = 0.0, sd = 0.0;
        for (std::size_t i = 0; i < s.active; ++i) {
            sp += (p[i] - mp) * (p[i] - mp);
            sd += (d[i] - md) * (d[i] - md);
        }
        h.mean_p[u] = mp;
        h.mean_d[u] = md;
        h.ss_p[u] = sp;
        h.ss_d[u] = sd;
    }
    return h;
}

}  // namespace

std::vector<LagMetrics> lag_metrics(const mask::MaskedSeries& s, std::span<const std::int64_t> targets,
                                    std::span<const int> lags, unsigned threads) {
    if (s.active < 2) throw DataError(fmt::format("lag metrics need at least 2 active cells (got {})", s.active));
    if (targets.empty()) throw DataError("lag metrics need at least one target hour");
    if (lags.empty()) throw ConfigError("no candidate lags");
    const auto min_target = *std::min_element(targets.begin(), targets.end());
    const auto max_target = *std::max_element(targets.begin(), targets.end());
    if (max_target >= static_cast<std::int64_t>(s.hours))
        throw DataError(fmt::format("target hour {} outside the series", max_target));
    for (int lag : lags)
        if (lag < 1 || lag > min_target)
            throw ConfigError(fmt::format("lag {} invalid: lags must lie in [1, {}] (smallest target index)", lag,
                                          min_target));

    // Every hour that appears as a target or as a lagged input.
    std::vector<std::uint8_t> used(s.hours, 0);
    for (auto t : targets) {
        used[static_cast<std::size_t>(t)] = 1;
        for (int lag : lags) used[static_cast<std::size_t>(t - lag)] = 1;
    }
    std::vector<std::int64_t> needed;
    for (std::size_t t = 0; t < s.hours; ++t)
        if (used[t]) needed.push_back(static_cast<std::int64_t>(t));
    const auto mom = moments(s, needed);

    const double n_active = static_cast<double>(s.active);
    std::vector<LagMetrics> out(lags.size());
    parallel_for(lags.size(), threads, [&](std::size_t li) {
        const int lag = lags[li];
        double sum_same = 0.0, sum_cross = 0.0, sum_mae = 0.0, sum_ad = 0.0;
        std::size_t n_same = 0, n_cross = 0;
        std::vector<double> maes;
        maes.reserve(targets.size());
        for (auto t : targets) {
            const auto u = static_cast<std::size_t>(t);
            const auto v = static_cast<std::size_t>(t - lag);
            const auto pt = s.pickup_at(t), dt = s.dropoff_at(t);
            const auto ph = s.pickup_at(t - lag), dh = s.dropoff_at(t - lag);
            const double mpt = mom.mean_p[u], mdt = mom.mean_d[u], mph = mom.mean_p[v], mdh = mom.mean_d[v];
            double c_pp = 0.0, c_dd = 0.0, c_pd = 0.0, c_dp = 0.0, l1 = 0.0;
            for (std::size_t i = 0; i < s.active; ++i) {
                const double a = pt[i] - mpt, b = dt[i] - mdt, x = ph[i] - mph, y = dh[i] - mdh;
                c_pp += a * x;
                c_dd += b * y;
                c_pd += a * y;
                c_dp += b * x;
                l1 += std::abs(pt[i] - ph[i]) + std::abs(dt[i] - dh[i]);
            }
            const double sp_t = mom.ss_p[u], sd_t = mom.ss_d[u], sp_h = mom.ss_p[v], sd_h = mom.ss_d[v];
            if (sp_t > 0.0 && sp_h > 0.0 && sd_t > 0.0 && sd_h > 0.0) {
                sum_same += 0.5 * (c_pp / std::sqrt(sp_t * sp_h) + c_dd / std::sqrt(sd_t * sd_h));
                ++n_same;
            }
            if (sp_t > 0.0 && sd_h > 0.0 && sd_t > 0.0 && sp_h > 0.0) {
                sum_cross += 0.5 * (c_pd / std::sqrt(sp_t * sd_h) + c_dp / std::sqrt(sd_t * sp_h));
                ++n_cross;
            }
            maes.push_back(l1 / (2.0 * n_active));
            sum_ad += l1;
        }
        const double n = static_cast<double>(targets.size());
        LagMetrics m;
        m.lag = lag;
        m.n_valid = targets.size();
        m.n_same_corr = n_same;
        m.n_cross_corr = n_cross;
        m.same_corr = n_same ? sum_same / static_cast<double>(n_same) : std::numeric_limits<double>::quiet_NaN();
        m.cross_corr = n_cross ? sum_cross / static_cast<double>(n_cross) : std::numeric_limits<double>::quiet_NaN();
        sum_mae = std::accumulate(maes.begin(), maes.end(), 0.0);
        m.same_mae = sum_mae / n;
        double var = 0.0;
        for (double e : maes) var += (e - m.same_mae) * (e - m.same_mae);
        m.same_mae_var = var / n;
        m.abs_diff = sum_ad / n;
        out[li] = m;
    });
    return out;
}

LagRanking rank_lags(std::span<const LagMetrics> metrics, std::span<const Metric> use) {
    if (metrics.size() < 2) throw ConfigError("ranking needs at least two lags");
    if (use.empty()) throw ConfigError("ranking needs at least one metric");
    LagRanking r;
    r.metrics.assign(use.begin(), use.end());
    r.rows.assign(metrics.begin(), metrics.end());
    const std::size_t n = r.rows.size();
    std::vector<double> rank_sum(n, 0.0);
    for (auto m : r.metrics) {
        std::vector<double> keys(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = r.rows[i].score(m);
            keys[i] = higher_is_better(m) ? -v : v;
        }
        auto ranks = average_ranks(keys);
        for (std::size_t i = 0; i < n; ++i) rank_sum[i] += ranks[i];
        r.ranks.push_back(std::move(ranks));
    }
    const double k = static_cast<double>(r.metrics.size());
    r.rank_avg.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.rank_avg[i] = rank_sum[i] / k;

    // Rank sums are multiples of 1/2, so comparing them is exact.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (rank_sum[a] != rank_sum[b]) return rank_sum[a] < rank_sum[b];
        if (r.rows[a].same_mae_var != r.rows[b].same_mae_var) return r.rows[a].same_mae_var < r.rows[b].same_mae_var;
        return r.rows[a].lag < r.rows[b].lag;
    });
    r.rank_final.resize(n);
    for (std::size_t pos = 0; pos < n; ++pos) r.rank_final[order[pos]] = pos + 1;
    return r;
}

std::vector<int> LagRanking::ordered_lags() const {
    std::vector<int> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[rank_final[i] - 1] = rows[i].lag;
    return out;
}

std::vector<int> top_k(const LagRanking& ranking, std::size_t k) {
    if (k > ranking.rows.size())
        throw ConfigError(fmt::format("requested top {} of only {} ranked lags", k, ranking.rows.size()));
    auto best = ranking.ordered_lags();
    best.resize(k);
    std::sort(best.begin(), best.end());
    return best;
}

std::vector<int> lag_universe(int min_lag, int max_lag) {
    if (min_lag < 1 || max_lag < min_lag)
        throw ConfigError(fmt::format("empty lag universe [{}, {}]", min_lag, max_lag));
    std::vector<int> out;
    for (int lag = min_lag; lag <= max_lag; ++lag) out.push_back(lag);
    return out;
}

void write_ranking_csv(std::ostream& out, const LagRanking& r) {
    std::vector<std::string> header{"lag", "same_corr", "cross_corr", "same_mae", "same_mae_var", "abs_diff"};
    for (auto m : r.metrics) header.push_back(fmt::format("rank_{}", to_string(m)));
    for (const char* h : {"rank_avg", "rank_final", "n_valid", "n_same_corr", "n_cross_corr"}) header.emplace_back(h);
    csv::write_row(out, header);
    std::vector<std::size_t> order(r.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i) order[r.rank_final[i] - 1] = i;
    for (auto i : order) {
        const auto& m = r.rows[i];
        std::vector<std::string> row{std::to_string(m.lag), csv::num(m.same_corr), csv::num(m.cross_corr),
                                     csv::num(m.same_mae), csv::num(m.same_mae_var), csv::num(m.abs_diff)};
        for (const auto& ranks : r.ranks) row.push_back(csv::num(ranks[i]));
        row.push_back(csv::num(r.rank_avg[i]));
        row.push_back(std::to_string(r.rank_final[i]));
        row.push_back(std::to_string(m.n_valid));
        row.push_back(std::to_string(m.n_same_corr));
        row.push_back(std::to_string(m.n_cross_corr));
        csv::write_row(out, row);
    }
}

namespace {

double to_double(const std::string& s, std::size_t line) {
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw DataError(fmt::format("ranking file line {}: bad number '{}'", line, s));
    return v;
}

}  // namespace

LagRanking read_ranking_csv(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> header, row;
    if (!reader.next(header)) throw DataError("ranking file is empty");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* need : {"lag", "same_corr", "cross_corr", "same_mae", "same_mae_var", "abs_diff", "rank_avg",
                             "rank_final", "n_valid"})
        if (!col.count(need)) throw DataError(fmt::format("ranking file lacks column '{}'", need));
    LagRanking r;
    for (const auto& h : header)
        if (h.rfind("rank_", 0) == 0 && h != "rank_avg" && h != "rank_final") r.metrics.push_back(parse_metric(h.substr(5)));
    r.ranks.resize(r.metrics.size());
    while (reader.next(row)) {
        if (row.size() != header.size())
            throw DataError(fmt::format("ranking file line {}: expected {} fields", reader.line(), header.size()));
        const auto line = reader.line();
        LagMetrics m;
        m.lag = static_cast<int>(to_double(row[col["lag"]], line));
        m.same_corr = to_double(row[col["same_corr"]], line);
        m.cross_corr = to_double(row[col["cross_corr"]], line);
        m.same_mae = to_double(row[col["same_mae"]], line);
        m.same_mae_var = to_double(row[col["same_mae_var"]], line);
        m.abs_diff = to_double(row[col["abs_diff"]], line);
        m.n_valid = static_cast<std::size_t>(to_double(row[col["n_valid"]], line));
        if (col.count("n_same_corr")) m.n_same_corr = static_cast<std::size_t>(to_double(row[col["n_same_corr"]], line));
        if (col.count("n_cross_corr"))
            m.n_cross_corr = static_cast<std::size_t>(to_double(row[col["n_cross_corr"]], line));
        r.rows.push_back(m);
        for (std::size_t k = 0; k < r.metrics.size(); ++k)
            r.ranks[k].push_back(to_double(row[col[fmt::format("rank_{}", to_string(r.metrics[k]))]], line));
        r.rank_avg.push_back(to_double(row[col["rank_avg"]], line));
        r.rank_final.push_back(static_cast<std::size_t>(to_double(row[col["rank_final"]], line)));
    }
    // rank_final must be a permutation of 1..n.
    std::vector<std::uint8_t> seen(r.rows.size() + 1, 0);
    for (auto f : r.rank_final) {
        if (f < 1 || f > r.rows.size() || seen[f]) throw DataError("ranking file: rank_final is not a permutation");
        seen[f] = 1;
    }
    if (r.rows.empty()) throw DataError("ranking file has no rows");
    return r;
}

}  // namespace gridlag::lagrank
