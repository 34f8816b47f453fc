#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridlag/lagrank.hpp"
#include "gridlag/mask.hpp"
#include "gridlag/predict.hpp"
#include "gridlag/split.hpp"
#include "gridlag/stats.hpp"

namespace gridlag::ablation {

enum class Preset { proposed, recent_adjacent, fixed_period };

[[nodiscard]] Preset parse_preset(std::string_view name);
[[nodiscard]] std::string_view to_string(Preset p) noexcept;

/// Default lags per demand type for a horizon (18 next-hour, 9 next-24h).
[[nodiscard]] std::size_t default_depth(split::Horizon h) noexcept;

/// Lag list of a preset with n lags:
///   recent-adjacent  next-hour {1..n}, next-24h {24..24+n-1}
///   fixed-period     next-hour {1 + 24d}, next-24h {24k}
///   proposed         top n of the ranking (ascending lag order)
/// Throws ConfigError when "proposed" is requested without a ranking.
[[nodiscard]] std::vector<int> preset_lags(Preset p, split::Horizon h, std::size_t n,
                                           const lagrank::LagRanking* ranking = nullptr);

struct NamedLags {
    std::string name;
    std::vector<int> lags;
};

struct ConfigResult {
    NamedLags config;
    predict::Evaluation evaluation;
};

struct Comparison {
    std::vector<ConfigResult> configs;
    std::vector<stats::PairedTestResult> pairs;  // all unordered pairs, Holm-adjusted as one family

    /// Name of the better configuration in a rejected pair (lower mean
    /// MSE), empty otherwise.
    [[nodiscard]] std::string winner(const stats::PairedTestResult& pair) const;
};

struct RunContext {
    const mask::MaskedSeries* series = nullptr;
    const predict::Trainer* trainer = nullptr;
    std::vector<std::int64_t> train;
    std::vector<std::int64_t> eval;  // validation or test targets
    predict::EvalConfig eval_cfg{};
    double alpha = 0.05;
    unsigned threads = 0;
};

/// Trains every configuration on the same training targets, evaluates
/// per-sample MSE on the evaluation targets, and runs two-sided signed-rank
/// tests on every pair with one Holm family of size k(k-1)/2.
[[nodiscard]] Comparison compare_configs(std::span<const NamedLags> configs, const RunContext& ctx);

struct DepthResult {
    std::size_t lags_per_type = 0;
    std::size_t channels = 0;
    std::vector<int> lags;
    predict::Evaluation evaluation;
    std::optional<stats::PairedTestResult> ni;  // vs the minimum-MSE depth
};

struct AblationResult {
    std::vector<DepthResult> depths;  // deepest first
    std::size_t min_mse_channels = 0;
    std::size_t minimal_ni_channels = 0;
    double margin_fraction = 0.02;

    [[nodiscard]] const DepthResult& at_channels(std::size_t channels) const;
};

/// Trains with the top n ranked lags for n = n_max down to n_min, finds the
/// minimum validation MSE depth, and tests every shallower depth for
/// non-inferiority against it (one Holm family). The minimal non-inferior
/// depth is the fewest channels that pass, or the minimum-MSE depth.
[[nodiscard]] AblationResult ablate_depth(const lagrank::LagRanking& ranking, std::size_t n_max,
                                          const RunContext& ctx, double margin_fraction = 0.02,
                                          std::size_t n_min = 1);

void write_comparison_csv(std::ostream& out, const Comparison& c);
void write_comparison_text(std::ostream& out, const Comparison& c);
void write_ablation_csv(std::ostream& out, const AblationResult& a);
void write_ablation_text(std::ostream& out, const AblationResult& a);

}  // namespace gridlag::ablation
