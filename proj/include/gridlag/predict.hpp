#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gridlag/image.hpp"
#include "gridlag/mask.hpp"
#include "gridlag/raster.hpp"

namespace gridlag::predict {

/// Stacked lag channels: n pick-up channels then n drop-off channels, each
/// in lag-list order. Raw counts are kept; value() applies the scaling.
class InputTensor {
public:
    InputTensor(std::vector<int> lags, std::size_t rows, std::size_t cols, double norm_factor);

    [[nodiscard]] std::size_t channels() const noexcept { return 2 * lags_.size(); }
    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] const std::vector<int>& lags() const noexcept { return lags_; }
    [[nodiscard]] double norm_factor() const noexcept { return norm_; }

    /// Normalized value of channel k at (r, c).
    [[nodiscard]] double value(std::size_t k, std::size_t r, std::size_t c) const {
        return raw(k, r, c) / norm_;
    }
    [[nodiscard]] double raw(std::size_t k, std::size_t r, std::size_t c) const {
        return raw_[(k * rows_ + r) * cols_ + c];
    }
    double& raw(std::size_t k, std::size_t r, std::size_t c) { return raw_[(k * rows_ + r) * cols_ + c]; }

private:
    std::vector<int> lags_;
    std::size_t rows_;
    std::size_t cols_;
    double norm_;
    std::vector<double> raw_;
};

struct TargetPair {
    CountImage pickup;
    CountImage dropoff;
};

struct Prediction {
    RealImage pickup;
    RealImage dropoff;
};

/// Throws DataError when t - max(lag) < 0 or t is outside the store,
/// ConfigError on a non-positive norm factor or an empty lag list.
[[nodiscard]] std::pair<InputTensor, TargetPair> build_input(const raster::FrameStore& store, std::int64_t t,
                                                             std::span<const int> lags, double norm_factor);

/// A fitted model that maps lagged frames to a two-channel prediction.
class Predictor {
public:
    virtual ~Predictor() = default;
    [[nodiscard]] virtual const std::vector<int>& lags() const noexcept = 0;
    /// Prediction at target hour t, written to the active-cell vectors.
    virtual void predict_masked(const mask::MaskedSeries& series, std::int64_t t, std::span<double> pickup,
                                std::span<double> dropoff) const = 0;
    /// Dense prediction. Throws ConfigError when the input lag list differs.
    [[nodiscard]] virtual Prediction predict(const InputTensor& input) const = 0;
};

enum class ModelKind { persistence, linear };

/// Closed-form baselines: persistence of one lag, or a ridge-regularized
/// linear map with one coefficient vector per output channel shared by all
/// active cells. Linear outputs are clamped at zero.
class PredictorModel final : public Predictor {
public:
    static PredictorModel persistence(std::vector<int> lags, int lag);
    static PredictorModel linear(std::vector<int> lags, double norm_factor, double ridge_lambda,
                                 std::array<std::vector<double>, 2> beta);

    [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<int>& lags() const noexcept override { return lags_; }
    [[nodiscard]] double norm_factor() const noexcept { return norm_; }
    [[nodiscard]] double ridge_lambda() const noexcept { return lambda_; }
    [[nodiscard]] int persistence_lag() const noexcept { return persistence_lag_; }
    /// beta()[k] = (intercept, one weight per input channel) for output k.
    [[nodiscard]] const std::array<std::vector<double>, 2>& beta() const noexcept { return beta_; }

    void predict_masked(const mask::MaskedSeries& series, std::int64_t t, std::span<double> pickup,
                        std::span<double> dropoff) const override;
    [[nodiscard]] Prediction predict(const InputTensor& input) const override;

private:
    PredictorModel() = default;

    ModelKind kind_ = ModelKind::persistence;
    std::vector<int> lags_;
    double norm_ = 1.0;
    double lambda_ = 0.0;
    int persistence_lag_ = 0;
    std::array<std::vector<double>, 2> beta_;
};

/// Solves (G + lambda I) beta = X'y for each output channel, where each
/// active cell of each training sample contributes one feature row
/// (1, channel values / norm_factor). Throws DataError when there are fewer
/// equations than unknowns, or when lambda = 0 and the system is singular.
[[nodiscard]] PredictorModel fit_linear(const mask::MaskedSeries& series, std::span<const std::int64_t> train,
                                        std::span<const int> lags, double ridge_lambda, double norm_factor);

enum class NormScope {
    training,  // max pixel over the frames touched by the training samples
    full,      // max pixel over the whole dataset
};

/// Global scaling factor (1 when every frame is empty).
[[nodiscard]] double norm_factor_for(const mask::MaskedSeries& series, std::span<const std::int64_t> train,
                                     std::span<const int> lags, NormScope scope);

/// Trains a predictor for a lag list on the given training targets.
class Trainer {
public:
    virtual ~Trainer() = default;
    [[nodiscard]] virtual std::unique_ptr<Predictor> fit(const mask::MaskedSeries& series,
                                                         std::span<const std::int64_t> train,
                                                         std::span<const int> lags) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

class LinearTrainer final : public Trainer {
public:
    explicit LinearTrainer(double ridge_lambda = 1e-3, NormScope scope = NormScope::training)
        : lambda_(ridge_lambda), scope_(scope) {}
    [[nodiscard]] std::unique_ptr<Predictor> fit(const mask::MaskedSeries& series,
                                                 std::span<const std::int64_t> train,
                                                 std::span<const int> lags) const override;
    [[nodiscard]] std::string name() const override { return "linear"; }

private:
    double lambda_;
    NormScope scope_;
};

/// Persistence of the first lag in the list.
class PersistenceTrainer final : public Trainer {
public:
    [[nodiscard]] std::unique_ptr<Predictor> fit(const mask::MaskedSeries& series,
                                                 std::span<const std::int64_t> train,
                                                 std::span<const int> lags) const override;
    [[nodiscard]] std::string name() const override { return "persistence"; }
};

struct EvalConfig {
    double epsilon = 1e-8;  // R^2 denominator stabilizer, squared demand units
    void validate() const;
};

struct SampleMetrics {
    std::int64_t target = 0;
    double mse = 0.0;
    double mae = 0.0;
    double max_ae = 0.0;
    double r2 = 0.0;
};

/// Masked MSE / MAE over 2|active| values, MaxAE over both channels, and
/// R^2 with per-channel masked means. Inputs are active-cell vectors.
/// Throws DataError on an empty support or mismatched lengths.
[[nodiscard]] SampleMetrics masked_metrics(std::span<const double> pred_pickup, std::span<const double> pred_dropoff,
                                           std::span<const double> true_pickup, std::span<const double> true_dropoff,
                                           const EvalConfig& cfg = {});

/// Dense form: gathers the active cells of full images first.
[[nodiscard]] SampleMetrics masked_metrics(const Prediction& pred, const TargetPair& target,
                                           const mask::ActivityMask& m, const EvalConfig& cfg = {});

struct MetricSummary {
    std::size_t samples = 0;
    double mse = 0.0;
    double mae = 0.0;
    double max_ae = 0.0;
    double r2 = 0.0;
};

struct Evaluation {
    std::vector<SampleMetrics> samples;  // in target order as given
    MetricSummary mean;

    [[nodiscard]] std::vector<double> mse() const;
};

[[nodiscard]] MetricSummary summarize(std::span<const SampleMetrics> samples);

/// Per-sample metrics on the masked series; parallel over samples.
[[nodiscard]] Evaluation evaluate(const Predictor& model, std::span<const std::int64_t> targets,
                                  const mask::MaskedSeries& series, const EvalConfig& cfg = {},
                                  unsigned threads = 0);

/// Dense reference path over full frames.
[[nodiscard]] Evaluation evaluate(const PredictorModel& model, std::span<const std::int64_t> targets,
                                  const raster::FrameStore& store, const mask::ActivityMask& m,
                                  const EvalConfig& cfg = {});

void write_model_csv(std::ostream& out, const PredictorModel& model);
[[nodiscard]] PredictorModel read_model_csv(std::istream& in);
void write_samples_csv(std::ostream& out, const Evaluation& e);
void write_summary_csv(std::ostream& out, const std::string& label, const MetricSummary& s, bool header = true);

}  // namespace gridlag::predict
