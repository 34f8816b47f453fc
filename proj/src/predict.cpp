#include "gridlag/predict.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gridlag/csv.hpp"
#include "gridlag/errors.hpp"
#include "gridlag/parallel.hpp"

namespace gridlag::predict {

InputTensor::InputTensor(std::vector<int> lags, std::size_t rows, std::size_t cols, double norm_factor)
    : lags_(std::move(lags)), rows_(rows), cols_(cols), norm_(norm_factor), raw_(2 * lags_.size() * rows * cols) {}

namespace {

void check_lags(std::span<const int> lags) {
    if (lags.empty()) throw ConfigError("lag list is empty");
    for (int lag : lags)
        if (lag < 1) throw ConfigError(fmt::format("lag {} must be at least 1", lag));
}

void check_norm(double norm) {
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw ConfigError(fmt::format("norm factor must be positive (got {})", norm));
}

}  // namespace

std::pair<InputTensor, TargetPair> build_input(const raster::FrameStore& store, std::int64_t t,
                                               std::span<const int> lags, double norm_factor) {
    check_lags(lags);
    check_norm(norm_factor);
    const int max_lag = *std::max_element(lags.begin(), lags.end());
    if (t < 0 || static_cast<std::size_t>(t) >= store.size())
        throw DataError(fmt::format("target hour {} outside the frame store", t));
    if (t - max_lag < 0) throw DataError(fmt::format("lag {} reaches before the first frame for target {}", max_lag, t));
    const auto& g = store.grid();
    InputTensor x({lags.begin(), lags.end()}, g.rows, g.cols, norm_factor);
    const std::size_t n = lags.size();
    for (std::size_t j = 0; j < n; ++j) {
        const auto& f = store[static_cast<std::size_t>(t - lags[j])];
        for (std::size_t r = 0; r < g.rows; ++r)
            for (std::size_t c = 0; c < g.cols; ++c) {
                x.raw(j, r, c) = f.pickup(r, c);
                x.raw(n + j, r, c) = f.dropoff(r, c);
            }
    }
    const auto& target = store[static_cast<std::size_t>(t)];
    return {std::move(x), TargetPair{target.pickup, target.dropoff}};
}

PredictorModel PredictorModel::persistence(std::vector<int> lags, int lag) {
    check_lags(lags);
    if (std::find(lags.begin(), lags.end(), lag) == lags.end())
        throw ConfigError(fmt::format("persistence lag {} is not in the lag list", lag));
    PredictorModel m;
    m.kind_ = ModelKind::persistence;
    m.lags_ = std::move(lags);
    m.persistence_lag_ = lag;
    return m;
}

PredictorModel PredictorModel::linear(std::vector<int> lags, double norm_factor, double ridge_lambda,
                                      std::array<std::vector<double>, 2> beta) {
    check_lags(lags);
    check_norm(norm_factor);
    for (const auto& b : beta) {
        if (b.size() != 2 * lags.size() + 1)
            throw ConfigError(fmt::format("expected {} coefficients per channel, got {}", 2 * lags.size() + 1, b.size()));
        for (double v : b)
            if (!std::isfinite(v)) throw DataError("linear coefficients must be finite");
    }
    PredictorModel m;
    m.kind_ = ModelKind::linear;
    m.lags_ = std::move(lags);
    m.norm_ = norm_factor;
    m.lambda_ = ridge_lambda;
    m.beta_ = std::move(beta);
    return m;
}

void PredictorModel::predict_masked(const mask::MaskedSeries& s, std::int64_t t, std::span<double> pickup,
                                    std::span<double> dropoff) const {
    if (pickup.size() != s.active || dropoff.size() != s.active) throw DataError("output length mismatch");
    const int max_lag = *std::max_element(lags_.begin(), lags_.end());
    if (t - max_lag < 0 || t >= static_cast<std::int64_t>(s.hours))
        throw DataError(fmt::format("target {} not predictable with lags up to {}", t, max_lag));
    if (kind_ == ModelKind::persistence) {
        const auto p = s.pickup_at(t - persistence_lag_);
        const auto d = s.dropoff_at(t - persistence_lag_);
        std::copy(p.begin(), p.end(), pickup.begin());
        std::copy(d.begin(), d.end(), dropoff.begin());
        return;
    }
    const std::size_t n = lags_.size();
    std::fill(pickup.begin(), pickup.end(), beta_[0][0]);
    std::fill(dropoff.begin(), dropoff.end(), beta_[1][0]);
    for (std::size_t ch = 0; ch < 2 * n; ++ch) {
        const int lag = lags_[ch % n];
        const auto src = ch < n ? s.pickup_at(t - lag) : s.dropoff_at(t - lag);
        const double bp = beta_[0][ch + 1], bd = beta_[1][ch + 1];
        for (std::size_t i = 0; i < s.active; ++i) {
            const double v = src[i] / norm_;
            pickup[i] += bp * v;
            dropoff[i] += bd * v;
        }
    }
    for (auto& v : pickup) v = std::max(v, 0.0);
    for (auto& v : dropoff) v = std::max(v, 0.0);
}

Prediction PredictorModel::predict(const InputTensor& x) const {
    if (x.lags() != lags_)
        throw ConfigError(fmt::format("input lags [{}] do not match model lags [{}]", fmt::join(x.lags(), ","),
                                      fmt::join(lags_, ",")));
    Prediction out{RealImage(x.rows(), x.cols()), RealImage(x.rows(), x.cols())};
    const std::size_t n = lags_.size();
    if (kind_ == ModelKind::persistence) {
        const auto j = static_cast<std::size_t>(std::find(lags_.begin(), lags_.end(), persistence_lag_) - lags_.begin());
        for (std::size_t r = 0; r < x.rows(); ++r)
            for (std::size_t c = 0; c < x.cols(); ++c) {
                out.pickup(r, c) = x.raw(j, r, c);
                out.dropoff(r, c) = x.raw(n + j, r, c);
            }
        return out;
    }
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double p = beta_[0][0], d = beta_[1][0];
            for (std::size_t ch = 0; ch < 2 * n; ++ch) {
                const double v = x.raw(ch, r, c) / norm_;
                p += beta_[0][ch + 1] * v;
                d += beta_[1][ch + 1] * v;
            }
            out.pickup(r, c) = std::max(p, 0.0);
            out.dropoff(r, c) = std::max(d, 0.0);
        }
    return out;
}

PredictorModel fit_linear(const mask::MaskedSeries& s, std::span<const std::int64_t> train, std::span<const int> lags,
                          double ridge_lambda, double norm_factor) {
    check_lags(lags);
    check_norm(norm_factor);
    if (!(ridge_lambda >= 0.0)) throw ConfigError("ridge lambda must be nonnegative");
    const std::size_t n = lags.size();
    const std::size_t dim = 2 * n + 1;
    if (train.size() * s.active < dim)
        throw DataError(fmt::format("{} masked training equations cannot determine {} coefficients",
                                    train.size() * s.active, dim));
    const int max_lag = *std::max_element(lags.begin(), lags.end());
    for (auto t : train)
        if (t - max_lag < 0 || t >= static_cast<std::int64_t>(s.hours))
            throw DataError(fmt::format("training target {} not usable with lags up to {}", t, max_lag));

    // Fixed-size blocks merged in order: the result does not depend on the
    // number of worker threads.
    constexpr std::size_t kBlock = 32;
    const std::size_t blocks = (train.size() + kBlock - 1) / kBlock;
    std::vector<Eigen::MatrixXd> grams(blocks);
    std::vector<Eigen::MatrixXd> rhs(blocks);
    parallel_for(blocks, 0, [&](std::size_t b) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), 2);
        Eigen::MatrixXd a(static_cast<Eigen::Index>(s.active), static_cast<Eigen::Index>(dim));
        Eigen::MatrixXd y(static_cast<Eigen::Index>(s.active), 2);
        const std::size_t end = std::min(train.size(), (b + 1) * kBlock);
        for (std::size_t k = b * kBlock; k < end; ++k) {
            const auto t = train[k];
            a.col(0).setOnes();
            for (std::size_t ch = 0; ch < 2 * n; ++ch) {
                const int lag = lags[ch % n];
                const auto src = ch < n ? s.pickup_at(t - lag) : s.dropoff_at(t - lag);
                for (std::size_t i = 0; i < s.active; ++i)
                    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ch + 1)) = src[i] / norm_factor;
            }
            const auto p = s.pickup_at(t), d = s.dropoff_at(t);
            for (std::size_t i = 0; i < s.active; ++i) {
                y(static_cast<Eigen::Index>(i), 0) = p[i];
                y(static_cast<Eigen::Index>(i), 1) = d[i];
            }
            gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
            xy.noalias() += a.transpose() * y;
        }
        grams[b] = gram.selfadjointView<Eigen::Lower>();
        rhs[b] = xy;
    });
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), 2);
    for (std::size_t b = 0; b < blocks; ++b) {
        gram += grams[b];
        xy += rhs[b];
    }
    gram.diagonal().array() += ridge_lambda;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
        if (ridge_lambda == 0.0)
            throw DataError("normal equations are singular with ridge lambda = 0; use a positive ridge lambda");
        throw DataError("normal equations could not be solved; increase the ridge lambda");
    }
    const Eigen::MatrixXd beta = llt.solve(xy);
    std::array<std::vector<double>, 2> coef;
    for (int k = 0; k < 2; ++k) coef[static_cast<std::size_t>(k)].assign(beta.col(k).data(), beta.col(k).data() + dim);
    return PredictorModel::linear({lags.begin(), lags.end()}, norm_factor, ridge_lambda, std::move(coef));
}

double norm_factor_for(const mask::MaskedSeries& s, std::span<const std::int64_t> train, std::span<const int> lags,
                       NormScope scope) {
    std::uint32_t mx = 0;
    if (scope == NormScope::full || train.empty()) {
        mx = s.max_pixel(0, static_cast<std::int64_t>(s.hours));
    } else {
        check_lags(lags);
        const int max_lag = *std::max_element(lags.begin(), lags.end());
        const auto [lo, hi] = std::minmax_element(train.begin(), train.end());
        mx = s.max_pixel(*lo - max_lag, *hi + 1);
    }
    return mx > 0 ? static_cast<double>(mx) : 1.0;
}

std::unique_ptr<Predictor> LinearTrainer::fit(const mask::MaskedSeries& s, std::span<const std::int64_t> train,
                                              std::span<const int> lags) const {
    const double norm = norm_factor_for(s, train, lags, scope_);
    return std::make_unique<PredictorModel>(fit_linear(s, train, lags, lambda_, norm));
}

std::unique_ptr<Predictor> PersistenceTrainer::fit(const mask::MaskedSeries&, std::span<const std::int64_t>,
                                                   std::span<const int> lags) const {
    check_lags(lags);
    return std::make_unique<PredictorModel>(PredictorModel::persistence({lags.begin(), lags.end()}, lags.front()));
}

void EvalConfig::validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("R^2 epsilon must be positive");
}

SampleMetrics masked_metrics(std::span<const double> pp, std::span<const double> pd, std::span<const double> tp,
                             std::span<const double> td, const EvalConfig& cfg) {
    cfg.validate();
    const std::size_t n = tp.size();
    if (n == 0) throw DataError("masked metrics need a nonempty active support");
    if (pp.size() != n || pd.size() != n || td.size() != n) throw DataError("masked metric inputs differ in length");
    const double mean_p = std::accumulate(tp.begin(), tp.end(), 0.0) / static_cast<double>(n);
    const double mean_d = std::accumulate(td.begin(), td.end(), 0.0) / static_cast<double>(n);
    double sse = 0.0, sae = 0.0, max_ae = 0.0, sst = 0.0;
    auto add = [&](double pred, double truth, double mean) {
        const double e = pred - truth;
        sse += e * e;
        sae += std::abs(e);
        max_ae = std::max(max_ae, std::abs(e));
        sst += (truth - mean) * (truth - mean);
    };
    for (std::size_t i = 0; i < n; ++i) add(pp[i], tp[i], mean_p);
    for (std::size_t i = 0; i < n; ++i) add(pd[i], td[i], mean_d);
    const double denom = 2.0 * static_cast<double>(n);
    return {0, sse / denom, sae / denom, max_ae, 1.0 - sse / (sst + cfg.epsilon)};
}

SampleMetrics masked_metrics(const Prediction& pred, const TargetPair& target, const mask::ActivityMask& m,
                             const EvalConfig& cfg) {
    return masked_metrics(mask::apply_mask(pred.pickup, m), mask::apply_mask(pred.dropoff, m),
                          mask::apply_mask(target.pickup, m), mask::apply_mask(target.dropoff, m), cfg);
}

std::vector<double> Evaluation::mse() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.mse);
    return out;
}

MetricSummary summarize(std::span<const SampleMetrics> samples) {
    MetricSummary m;
    m.samples = samples.size();
    if (samples.empty()) return m;
    for (const auto& s : samples) {
        m.mse += s.mse;
        m.mae += s.mae;
        m.max_ae += s.max_ae;
        m.r2 += s.r2;
    }
    const double n = static_cast<double>(samples.size());
    m.mse /= n;
    m.mae /= n;
    m.max_ae /= n;
    m.r2 /= n;
    return m;
}

Evaluation evaluate(const Predictor& model, std::span<const std::int64_t> targets, const mask::MaskedSeries& s,
                    const EvalConfig& cfg, unsigned threads) {
    cfg.validate();
    Evaluation e;
    e.samples.resize(targets.size());
    parallel_for(targets.size(), threads, [&](std::size_t k) {
        const auto t = targets[k];
        std::vector<double> p(s.active), d(s.active);
        model.predict_masked(s, t, p, d);
        auto m = masked_metrics(p, d, s.pickup_at(t), s.dropoff_at(t), cfg);
        m.target = t;
        e.samples[k] = m;
    });
    e.mean = summarize(e.samples);
    return e;
}

Evaluation evaluate(const PredictorModel& model, std::span<const std::int64_t> targets,
                    const raster::FrameStore& store, const mask::ActivityMask& m, const EvalConfig& cfg) {
    Evaluation e;
    for (auto t : targets) {
        const auto [x, y] = build_input(store, t, model.lags(), model.norm_factor());
        auto sm = masked_metrics(model.predict(x), y, m, cfg);
        sm.target = t;
        e.samples.push_back(sm);
    }
    e.mean = summarize(e.samples);
    return e;
}

void write_model_csv(std::ostream& out, const PredictorModel& model) {
    out << "kind," << (model.kind() == ModelKind::linear ? "linear" : "persistence") << '\n';
    out << "lags," << fmt::format("{}", fmt::join(model.lags(), " ")) << '\n';
    out << "ridge_lambda," << csv::num(model.ridge_lambda()) << '\n';
    out << "norm_factor," << csv::num(model.norm_factor()) << '\n';
    out << "persistence_lag," << model.persistence_lag() << '\n';
    if (model.kind() == ModelKind::linear) {
        const char* names[2] = {"beta_pickup", "beta_dropoff"};
        for (int k = 0; k < 2; ++k) {
            out << names[k];
            for (double b : model.beta()[static_cast<std::size_t>(k)]) out << ',' << csv::num(b);
            out << '\n';
        }
    }
}

namespace {

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw DataError(fmt::format("model file: bad number '{}'", s));
    return v;
}

}  // namespace

PredictorModel read_model_csv(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> row;
    std::string kind;
    std::vector<int> lags;
    double lambda = 0.0, norm = 1.0;
    int persistence_lag = 0;
    std::array<std::vector<double>, 2> beta;
    while (reader.next(row)) {
        if (row.empty()) continue;
        const auto& key = row[0];
        if (row.size() < 2) throw DataError(fmt::format("model file line {}: missing value", reader.line()));
        if (key == "kind") kind = row[1];
        else if (key == "lags") {
            std::istringstream ss(row[1]);
            int v = 0;
            while (ss >> v) lags.push_back(v);
        } else if (key == "ridge_lambda") lambda = parse_double(row[1]);
        else if (key == "norm_factor") norm = parse_double(row[1]);
        else if (key == "persistence_lag") persistence_lag = static_cast<int>(parse_double(row[1]));
        else if (key == "beta_pickup" || key == "beta_dropoff") {
            auto& b = beta[key == "beta_pickup" ? 0 : 1];
            for (std::size_t i = 1; i < row.size(); ++i) b.push_back(parse_double(row[i]));
        }
    }
    try {
        if (kind == "linear") return PredictorModel::linear(lags, norm, lambda, beta);
        if (kind == "persistence") return PredictorModel::persistence(lags, persistence_lag);
    } catch (const ConfigError& e) {
        throw DataError(fmt::format("model file: {}", e.what()));
    }
    throw DataError(fmt::format("model file: unknown kind '{}'", kind));
}

void write_samples_csv(std::ostream& out, const Evaluation& e) {
    out << "target_hour_index,mse,mae,max_ae,r2\n";
    for (const auto& s : e.samples)
        out << s.target << ',' << csv::num(s.mse) << ',' << csv::num(s.mae) << ',' << csv::num(s.max_ae) << ','
            << csv::num(s.r2) << '\n';
}

void write_summary_csv(std::ostream& out, const std::string& label, const MetricSummary& s, bool header) {
    if (header) out << "label,samples,mse,mae,max_ae,r2\n";
    out << csv::escape(label) << ',' << s.samples << ',' << csv::num(s.mse) << ',' << csv::num(s.mae) << ','
        << csv::num(s.max_ae) << ',' << csv::num(s.r2) << '\n';
}

}  // namespace gridlag::predict
