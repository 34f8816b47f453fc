#include "gridlag/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "gridlag/ranks.hpp"

namespace gridlag::stats {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

double norm_cdf(double z) { return boost::math::cdf(kStdNormal, z); }
double norm_sf(double z) { return boost::math::cdf(boost::math::complement(kStdNormal, z)); }
double norm_ppf(double p) { return boost::math::quantile(kStdNormal, p); }

// c[0] + c[1] x + ... + c[k-1] x^(k-1)
double poly(std::initializer_list<double> c, double x) {
    double r = 0.0;
    for (auto it = std::rbegin(c); it != std::rend(c); ++it) r = r * x + *it;
    return r;
}

}  // namespace

double mean(std::span<const double> x) {
    if (x.empty()) throw DataError("mean of an empty vector");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

std::string_view to_string(Alternative a) noexcept {
    switch (a) {
        case Alternative::two_sided: return "two-sided";
        case Alternative::less: return "less";
        case Alternative::greater: return "greater";
    }
    return "?";
}

ShapiroResult shapiro_wilk(std::span<const double> input, std::uint64_t seed) {
    ShapiroResult res;
    std::vector<double> x(input.begin(), input.end());
    if (x.size() < 3) throw DataError(fmt::format("Shapiro-Wilk needs at least 3 values (got {})", x.size()));
    for (double v : x)
        if (!std::isfinite(v)) throw DataError("Shapiro-Wilk input must be finite");
    if (x.size() > 5000) {
        std::vector<double> sub;
        sub.reserve(5000);
        std::mt19937_64 rng(seed);
        std::sample(x.begin(), x.end(), std::back_inserter(sub), 5000, rng);
        x = std::move(sub);
        res.subsampled = true;
    }
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    res.n_used = n;
    if (x.back() - x.front() <= 0.0) throw DataError("Shapiro-Wilk input has zero range");

    const double an = static_cast<double>(n);
    const std::size_t half = n / 2;
    std::vector<double> a(half + 1, 0.0);  // 1-based upper-half weights
    if (n == 3) {
        a[1] = std::numbers::sqrt2 / 2.0;
    } else {
        const double an25 = an + 0.25;
        std::vector<double> m(half + 1);
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= half; ++i) {
            m[i] = -norm_ppf((static_cast<double>(i) - 0.375) / an25);
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = m[1] / ssumm2 + poly({0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056}, rsn);
        std::size_t first;
        double fac;
        if (n > 5) {
            first = 3;
            const double a2 = m[2] / ssumm2 + poly({0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633}, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[2] = a2;
        } else {
            first = 2;
            fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
        }
        a[1] = a1;
        for (std::size_t i = first; i <= half; ++i) a[i] = m[i] / fac;
    }

    const double mu = std::accumulate(x.begin(), x.end(), 0.0) / an;
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    double num = 0.0;
    for (std::size_t i = 1; i <= half; ++i) num += a[i] * (x[n - i] - x[i - 1]);
    double w = std::min(1.0, num * num / ss);
    res.w = w;

    if (n == 3) {
        constexpr double stqr = std::numbers::pi / 3.0;  // asin(sqrt(3/4))
        w = std::max(w, 0.75);
        res.p = std::max(0.0, 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - stqr));
        return res;
    }
    const double w1 = std::log(1.0 - w);
    double y, m, s;
    if (n <= 11) {
        const double gamma = poly({-2.273, 0.459}, an);
        if (w1 >= gamma) {
            res.p = 1e-99;
            return res;
        }
        y = -std::log(gamma - w1);
        m = poly({0.5440, -0.39978, 0.025054, -6.714e-4}, an);
        s = std::exp(poly({1.3822, -0.77857, 0.062767, -0.0020322}, an));
    } else {
        const double xx = std::log(an);
        y = w1;
        m = poly({-1.5861, -0.31082, -0.083751, 0.0038915}, xx);
        s = std::exp(poly({-0.4803, -0.082676, 0.0030302}, xx));
    }
    res.p = norm_sf((y - m) / s);
    return res;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> d, Alternative alt, WilcoxonMethod method) {
    std::vector<double> nz;
    nz.reserve(d.size());
    for (double v : d) {
        if (!std::isfinite(v)) throw DataError("Wilcoxon differences must be finite");
        if (v != 0.0) nz.push_back(v);
    }
    if (nz.empty()) throw DegenerateError("degenerate: identical configurations (all paired differences are zero)");

    const std::size_t n = nz.size();
    std::vector<double> mag(n);
    for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(nz[i]);
    const auto ranks = average_ranks(mag);

    WilcoxonResult r;
    r.n_effective = n;
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (nz[i] > 0.0) w_plus += ranks[i];
    r.w_plus = w_plus;
    const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
    r.statistic = alt == Alternative::two_sided ? std::min(w_plus, total - w_plus) : w_plus;

    // Tie groups among magnitudes.
    std::vector<double> sorted = mag;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        if (j - i > 1) r.ties = true;
        tie_term += t * t * t - t;
        i = j;
    }

    const bool exact = method == WilcoxonMethod::exact || (method == WilcoxonMethod::automatic && n <= 25 && !r.ties);
    r.exact = exact;
    if (exact) {
        // Null distribution of the doubled statistic (average ranks are
        // multiples of 1/2), built by halving so probabilities stay exact
        // dyadic fractions for small n.
        std::vector<std::size_t> r2(n);
        std::size_t sum2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
            sum2 += r2[i];
        }
        std::vector<double> dist(sum2 + 1, 0.0);
        dist[0] = 1.0;
        std::size_t reach = 0;
        for (auto step : r2) {
            reach += step;
            for (std::size_t s = reach; s >= step; --s) {
                dist[s] = 0.5 * (dist[s] + dist[s - step]);
                if (s == step) break;
            }
            for (std::size_t s = 0; s < step && s <= reach; ++s) dist[s] *= 0.5;
        }
        const auto w2 = static_cast<std::size_t>(std::llround(2.0 * w_plus));
        double lower = 0.0, upper = 0.0;
        for (std::size_t s = 0; s <= w2; ++s) lower += dist[s];
        for (std::size_t s = w2; s <= sum2; ++s) upper += dist[s];
        switch (alt) {
            case Alternative::less: r.p = std::min(1.0, lower); break;
            case Alternative::greater: r.p = std::min(1.0, upper); break;
            case Alternative::two_sided: r.p = std::min(1.0, 2.0 * std::min(lower, upper)); break;
        }
        return r;
    }

    const double an = static_cast<double>(n);
    const double mu = an * (an + 1.0) / 4.0;
    const double var = an * (an + 1.0) * (2.0 * an + 1.0) / 24.0 - tie_term / 48.0;
    const double sigma = std::sqrt(var);
    const double diff = w_plus - mu;
    switch (alt) {
        case Alternative::less:
            r.z = (diff + 0.5) / sigma;
            r.p = norm_cdf(r.z);
            break;
        case Alternative::greater:
            r.z = (diff - 0.5) / sigma;
            r.p = norm_sf(r.z);
            break;
        case Alternative::two_sided:
            r.z = std::max(std::abs(diff) - 0.5, 0.0) / sigma;
            r.p = std::min(1.0, 2.0 * norm_sf(r.z));
            break;
    }
    return r;
}

HolmResult holm_correct(std::span<const double> p, double alpha) {
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw DataError(fmt::format("p-value {} outside [0, 1]", v));
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    HolmResult h{std::vector<double>(m), std::vector<bool>(m)};
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double adj = std::min(1.0, static_cast<double>(m - i) * p[order[i]]);
        running = std::max(running, adj);
        h.adjusted[order[i]] = running;
        h.reject[order[i]] = running < alpha;
    }
    return h;
}

namespace {

void check_paired(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DataError(fmt::format("paired vectors differ in length ({} vs {})", a.size(), b.size()));
    if (a.empty()) throw DataError("paired vectors are empty");
}

std::optional<double> normality(std::span<const double> d) {
    try {
        return shapiro_wilk(d).p;
    } catch (const DataError&) {
        return std::nullopt;
    }
}

}  // namespace

PairedTestResult paired_test(std::span<const double> a, std::span<const double> b, std::string label_a,
                             std::string label_b, double alpha) {
    check_paired(a, b);
    PairedTestResult r;
    r.label_a = std::move(label_a);
    r.label_b = std::move(label_b);
    r.test = "wilcoxon";
    r.alternative = Alternative::two_sided;
    r.mean_a = mean(a);
    r.mean_b = mean(b);
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    r.normality_p = normality(d);
    try {
        const auto w = wilcoxon_signed_rank(d, Alternative::two_sided);
        r.statistic = w.statistic;
        r.p_raw = w.p;
        r.n_effective = w.n_effective;
    } catch (const DegenerateError& e) {
        r.error = e.what();
        r.p_raw = 1.0;
    }
    r.p_adjusted = r.p_raw;
    r.reject = r.p_adjusted < alpha;
    return r;
}

PairedTestResult non_inferiority(std::span<const double> cand, std::span<const double> ref, double margin_fraction,
                                 double alpha, std::string label_cand, std::string label_ref) {
    check_paired(cand, ref);
    if (!(margin_fraction > 0.0)) throw ConfigError("non-inferiority margin fraction must be positive");
    PairedTestResult r;
    r.label_a = std::move(label_cand);
    r.label_b = std::move(label_ref);
    r.test = "non-inferiority";
    r.alternative = Alternative::less;
    r.mean_a = mean(cand);
    r.mean_b = mean(ref);
    r.margin = margin_fraction * r.mean_b;
    std::vector<double> d(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) d[i] = cand[i] - ref[i] - r.margin;
    r.normality_p = normality(d);
    try {
        const auto w = wilcoxon_signed_rank(d, Alternative::less);
        r.statistic = w.statistic;
        r.p_raw = w.p;
        r.n_effective = w.n_effective;
    } catch (const DegenerateError& e) {
        r.error = e.what();
        r.p_raw = 1.0;
    }
    r.p_adjusted = r.p_raw;
    r.reject = r.p_adjusted < alpha;
    return r;
}

void apply_holm(std::span<PairedTestResult> family, double alpha) {
    std::vector<double> p;
    p.reserve(family.size());
    for (const auto& r : family) p.push_back(r.p_raw);
    const auto h = holm_correct(p, alpha);
    for (std::size_t i = 0; i < family.size(); ++i) {
        family[i].p_adjusted = h.adjusted[i];
        family[i].reject = h.reject[i];
    }
}

}  // namespace gridlag::stats
