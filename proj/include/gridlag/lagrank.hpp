#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "gridlag/image.hpp"
#include "gridlag/mask.hpp"

namespace gridlag::lagrank {

enum class Metric {
    same_corr,   // mean of the pick-up/pick-up and drop-off/drop-off correlations
    cross_corr,  // mean of the pick-up/drop-off and drop-off/pick-up correlations
    same_mae,    // same-channel mean absolute difference per active pixel
    abs_diff,    // same-channel absolute difference sum (diagnostic)
};

[[nodiscard]] std::string_view to_string(Metric m) noexcept;
[[nodiscard]] Metric parse_metric(std::string_view name);
/// Correlations rank descending, error metrics ascending.
[[nodiscard]] bool higher_is_better(Metric m) noexcept;

inline const std::vector<Metric> kDefaultMetrics{Metric::same_corr, Metric::cross_corr, Metric::same_mae};

/// Sample Pearson correlation; nullopt when either side has zero variance.
/// Throws DataError for fewer than 2 values or mismatched lengths.
[[nodiscard]] std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

template <class T>
[[nodiscard]] std::optional<double> pearson_masked(const Image<T>& a, const Image<T>& b, const mask::ActivityMask& m) {
    return pearson(mask::apply_mask(a, m), mask::apply_mask(b, m));
}

struct LagMetrics {
    int lag = 0;
    double same_corr = 0.0;     // NaN when no instance is defined
    double cross_corr = 0.0;    // NaN when no instance is defined
    double same_mae = 0.0;
    double same_mae_var = 0.0;  // population variance over instances
    double abs_diff = 0.0;
    std::size_t n_valid = 0;       // target instances evaluated
    std::size_t n_same_corr = 0;   // instances with a defined same-channel correlation
    std::size_t n_cross_corr = 0;  // instances with a defined cross-channel correlation

    [[nodiscard]] double score(Metric m) const noexcept;
};

/// Per-lag metrics averaged over the target hours. An instance whose
/// correlation is undefined (a constant frame) is left out of that
/// correlation's mean only. Throws ConfigError when a lag is < 1 or exceeds
/// the smallest target index, DataError when |active| < 2.
[[nodiscard]] std::vector<LagMetrics> lag_metrics(const mask::MaskedSeries& series,
                                                  std::span<const std::int64_t> targets, std::span<const int> lags,
                                                  unsigned threads = 0);

struct LagRanking {
    std::vector<Metric> metrics;
    std::vector<LagMetrics> rows;
    std::vector<std::vector<double>> ranks;  // [metric][row]
    std::vector<double> rank_avg;
    std::vector<std::size_t> rank_final;  // 1 .. rows.size()

    /// Lags ordered best-first.
    [[nodiscard]] std::vector<int> ordered_lags() const;
};

/// Weight-free aggregation: average per-metric ranks, then order by the
/// average; ties go to the lower MAE variance, then the smaller lag.
/// Throws ConfigError for fewer than 2 lags or an empty metric set.
[[nodiscard]] LagRanking rank_lags(std::span<const LagMetrics> metrics,
                                   std::span<const Metric> use = kDefaultMetrics);

/// The k best lags, listed in ascending lag order. Throws ConfigError when
/// k exceeds the number of ranked lags.
[[nodiscard]] std::vector<int> top_k(const LagRanking& ranking, std::size_t k);

void write_ranking_csv(std::ostream& out, const LagRanking& ranking);
[[nodiscard]] LagRanking read_ranking_csv(std::istream& in);

/// Lags 1..max_lag restricted to lag >= min_lag.
[[nodiscard]] std::vector<int> lag_universe(int min_lag, int max_lag);

}  // namespace gridlag::lagrank
