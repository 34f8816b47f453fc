#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridlag/errors.hpp"

namespace gridlag::stats {

/// All paired differences are zero: the two configurations are identical.
class DegenerateError : public DataError {
public:
    using DataError::DataError;
};

struct ShapiroResult {
    double w = 0.0;
    double p = 0.0;
    std::size_t n_used = 0;
    bool subsampled = false;
};

/// Shapiro-Wilk W and p-value (Royston's polynomial approximations).
/// Inputs longer than 5000 are reduced to a seeded uniform subsample of
/// 5000. Throws DataError for n < 3 or zero range.
[[nodiscard]] ShapiroResult shapiro_wilk(std::span<const double> x, std::uint64_t seed = 20190310);

enum class Alternative { two_sided, less, greater };
enum class WilcoxonMethod { automatic, exact, normal };

[[nodiscard]] std::string_view to_string(Alternative a) noexcept;

struct WilcoxonResult {
    double w_plus = 0.0;     // sum of ranks of positive differences
    double statistic = 0.0;  // min(W+, W-) for two-sided, W+ otherwise
    double p = 1.0;
    double z = 0.0;          // normal path only
    std::size_t n_effective = 0;
    bool ties = false;
    bool exact = false;
};

/// Signed-rank test on paired differences. Exact zeros are dropped; tied
/// magnitudes share average ranks. The automatic method enumerates the null
/// distribution for n <= 25 without ties and otherwise uses the normal
/// approximation with tie-corrected variance and a 0.5 continuity
/// correction. Throws DegenerateError when every difference is zero.
[[nodiscard]] WilcoxonResult wilcoxon_signed_rank(std::span<const double> d,
                                                  Alternative alt = Alternative::two_sided,
                                                  WilcoxonMethod method = WilcoxonMethod::automatic);

struct HolmResult {
    std::vector<double> adjusted;
    std::vector<bool> reject;
};

/// Holm step-down adjustment, reported in input order; reject iff
/// adjusted p < alpha. Throws DataError for p outside [0, 1].
[[nodiscard]] HolmResult holm_correct(std::span<const double> p, double alpha = 0.05);

struct PairedTestResult {
    std::string label_a;
    std::string label_b;
    std::string test;  // "wilcoxon" or "non-inferiority"
    Alternative alternative = Alternative::two_sided;
    double statistic = 0.0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    bool reject = false;
    std::size_t n_effective = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double margin = 0.0;                 // non-inferiority delta
    std::optional<double> normality_p;   // Shapiro-Wilk on the differences
    std::optional<std::string> error;    // e.g. degenerate pair
};

/// Two-sided signed-rank test of a - b; degenerate pairs yield p = 1 and an
/// error note instead of throwing.
[[nodiscard]] PairedTestResult paired_test(std::span<const double> a, std::span<const double> b,
                                           std::string label_a = "A", std::string label_b = "B",
                                           double alpha = 0.05);

/// One-sided test that cand does not exceed ref by more than
/// margin_fraction * mean(ref): differences cand - ref - delta are tested
/// for a negative location.
[[nodiscard]] PairedTestResult non_inferiority(std::span<const double> cand, std::span<const double> ref,
                                               double margin_fraction = 0.02, double alpha = 0.05,
                                               std::string label_cand = "candidate",
                                               std::string label_ref = "reference");

/// Applies Holm across a family of results in place.
void apply_holm(std::span<PairedTestResult> family, double alpha = 0.05);

[[nodiscard]] double mean(std::span<const double> x);

}  // namespace gridlag::stats
