#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gridlag/errors.hpp"
#include "gridlag/parallel.hpp"
#include "gridlag/predict.hpp"
#include "metric_oracle.hpp"
#include "support.hpp"

using namespace gridlag;
using predict::PredictorModel;

namespace {

mask::MaskedSeries random_series(std::size_t hours, std::size_t active, std::uint64_t seed, double rate = 4.0) {
    mask::MaskedSeries s(hours, active);
    std::mt19937_64 rng(seed);
    std::poisson_distribution<int> draw(rate);
    for (auto& v : s.pickup) v = draw(rng);
    for (auto& v : s.dropoff) v = draw(rng);
    return s;
}

// Dense Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
        std::swap(a[k], a[piv]);
        std::swap(b[k], b[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double v = b[k];
        for (std::size_t j = k + 1; j < n; ++j) v -= a[k][j] * x[j];
        x[k] = v / a[k][k];
    }
    return x;
}

}  // namespace

TEST_CASE("input tensor stacks pick-up lags then drop-off lags") {
    auto store = testing::make_store(3, 4, 3, [](std::int64_t h, raster::DemandFrame& f) {
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                f.pickup(r, c) = static_cast<std::uint32_t>(h * 100 + r * 4 + c);
                f.dropoff(r, c) = static_cast<std::uint32_t>(h * 1000 + r * 4 + c);
            }
    });
    std::vector<int> lags{1, 24, 5};
    const double norm = 10000.0;
    auto [x, y] = predict::build_input(store, 40, lags, norm);
    CHECK(x.channels() == 6);
    for (std::size_t j = 0; j < lags.size(); ++j)
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 4; ++c) {
                CHECK(x.value(j, r, c) == store[40 - lags[j]].pickup(r, c) / norm);
                CHECK(x.value(3 + j, r, c) == store[40 - lags[j]].dropoff(r, c) / norm);
            }
    CHECK(y.pickup == store[40].pickup);
    CHECK(y.dropoff == store[40].dropoff);

    std::vector<int> eighteen;
    for (int k = 1; k <= 18; ++k) eighteen.push_back(k);
    CHECK(predict::build_input(store, 40, eighteen, 1.0).first.channels() == 36);

    std::vector<int> late{41};
    CHECK_THROWS_AS((void)predict::build_input(store, 40, late, 1.0), DataError);
    CHECK_THROWS_AS((void)predict::build_input(store, 72, lags, 1.0), DataError);
    CHECK_THROWS_AS((void)predict::build_input(store, 40, lags, 0.0), ConfigError);
    std::vector<int> none;
    CHECK_THROWS_AS((void)predict::build_input(store, 40, none, 1.0), ConfigError);
}

TEST_CASE("scaling by the largest pixel keeps inputs in [0, 1]") {
    std::mt19937_64 rng(4);
    auto store = testing::make_store(5, 5, 2, [&](std::int64_t, raster::DemandFrame& f) {
        f.pickup = testing::random_image(rng, 5, 5, 50);
        f.dropoff = testing::random_image(rng, 5, 5, 50);
    });
    auto m = mask::build_mask(store);
    auto s = mask::mask_series(store, m);
    std::vector<std::int64_t> none;
    std::vector<int> lags{1, 2};
    const double norm = predict::norm_factor_for(s, none, lags, predict::NormScope::full);
    std::uint32_t mx = 0;
    for (const auto& f : store.frames())
        for (auto v : f.pickup.values()) mx = std::max(mx, v);
    for (const auto& f : store.frames())
        for (auto v : f.dropoff.values()) mx = std::max(mx, v);
    CHECK(norm == mx);
    for (std::int64_t t = 2; t < 48; ++t) {
        auto [x, y] = predict::build_input(store, t, lags, norm);
        for (std::size_t k = 0; k < x.channels(); ++k)
            for (std::size_t r = 0; r < 5; ++r)
                for (std::size_t c = 0; c < 5; ++c) {
                    CHECK(x.value(k, r, c) >= 0.0);
                    CHECK(x.value(k, r, c) <= 1.0);
                }
    }
    // The training scope only looks at frames the training samples touch.
    std::vector<std::int64_t> train{10, 11};
    CHECK(predict::norm_factor_for(s, train, lags, predict::NormScope::training) == s.max_pixel(8, 12));
    mask::MaskedSeries empty(5, 3);
    CHECK(predict::norm_factor_for(empty, none, lags, predict::NormScope::full) == 1.0);
}

TEST_CASE("linear fit recovers an exact copy of one channel") {
    auto s = random_series(600, 15, 21);
    std::vector<int> lags{1, 5, 24};
    std::vector<std::int64_t> train;
    for (std::int64_t t = 100; t < 580; t += 40) {
        train.push_back(t);
        auto p = s.pickup_at(t), src = s.pickup_at(t - 1);
        std::copy(src.begin(), src.end(), p.begin());
        auto d = s.dropoff_at(t), dsrc = s.dropoff_at(t - 24);
        std::copy(dsrc.begin(), dsrc.end(), d.begin());
    }
    const double norm = 7.0;
    auto model = predict::fit_linear(s, train, lags, 0.0, norm);
    std::vector<double> want_p{0, norm, 0, 0, 0, 0, 0}, want_d{0, 0, 0, 0, 0, 0, norm};
    for (std::size_t k = 0; k < 7; ++k) {
        CHECK(model.beta()[0][k] == doctest::Approx(want_p[k]).epsilon(1e-9).scale(1.0));
        CHECK(model.beta()[1][k] == doctest::Approx(want_d[k]).epsilon(1e-9).scale(1.0));
    }
    auto e = predict::evaluate(model, train, s);
    CHECK(e.mean.mse < 1e-16);
}

TEST_CASE("heavy ridge shrinks the model to zero") {
    auto s = random_series(200, 10, 8);
    std::vector<int> lags{1, 2};
    std::vector<std::int64_t> train;
    for (std::int64_t t = 10; t < 200; ++t) train.push_back(t);
    auto model = predict::fit_linear(s, train, lags, 1e14, 5.0);
    for (const auto& b : model.beta())
        for (double v : b) CHECK(std::abs(v) < 1e-6);
    std::vector<double> p(10), d(10);
    model.predict_masked(s, 50, p, d);
    for (double v : p) CHECK(v < 1e-4);
}

TEST_CASE("ridge solution matches an explicit normal-equation solve") {
    auto s = random_series(120, 9, 33);
    std::vector<int> lags{1, 3, 7};
    std::vector<std::int64_t> train{20, 31, 45, 60, 77, 90, 111};
    const double norm = 6.0, lambda = 0.37;
    auto model = predict::fit_linear(s, train, lags, lambda, norm);
    const std::size_t dim = 7;
    for (int out = 0; out < 2; ++out) {
        std::vector<std::vector<double>> g(dim, std::vector<double>(dim, 0.0));
        std::vector<double> rhs(dim, 0.0);
        for (auto t : train)
            for (std::size_t i = 0; i < s.active; ++i) {
                std::vector<double> x{1.0};
                for (int lag : lags) x.push_back(s.pickup_at(t - lag)[i] / norm);
                for (int lag : lags) x.push_back(s.dropoff_at(t - lag)[i] / norm);
                const double y = out == 0 ? s.pickup_at(t)[i] : s.dropoff_at(t)[i];
                for (std::size_t a = 0; a < dim; ++a) {
                    rhs[a] += x[a] * y;
                    for (std::size_t b = 0; b < dim; ++b) g[a][b] += x[a] * x[b];
                }
            }
        for (std::size_t a = 0; a < dim; ++a) g[a][a] += lambda;
        auto want = solve(g, rhs);
        for (std::size_t k = 0; k < dim; ++k)
            CHECK(std::abs(model.beta()[out][k] - want[k]) < 1e-8);
    }
}

TEST_CASE("fit results do not depend on the thread count") {
    auto s = random_series(2000, 12, 2);
    std::vector<int> lags{1, 24};
    std::vector<std::int64_t> train;
    for (std::int64_t t = 24; t < 2000; ++t) train.push_back(t);
    auto a = predict::fit_linear(s, train, lags, 1e-3, 10.0);
    thread_cap() = 1;
    auto b = predict::fit_linear(s, train, lags, 1e-3, 10.0);
    thread_cap() = 0;
    CHECK(a.beta() == b.beta());
}

TEST_CASE("fit rejects underdetermined and singular systems") {
    auto s = random_series(50, 2, 1);
    std::vector<int> lags{1, 2, 3};
    std::vector<std::int64_t> few{10, 11, 12};  // 6 equations, 7 unknowns
    CHECK_THROWS_AS((void)predict::fit_linear(s, few, lags, 1.0, 1.0), DataError);
    mask::MaskedSeries flat(50, 4);
    std::vector<std::int64_t> train{10, 20, 30, 40};
    CHECK_THROWS_AS((void)predict::fit_linear(flat, train, lags, 0.0, 1.0), DataError);
    CHECK_NOTHROW((void)predict::fit_linear(flat, train, lags, 1.0, 1.0));
    CHECK_THROWS_AS((void)predict::fit_linear(s, train, lags, -1.0, 1.0), ConfigError);
    std::vector<std::int64_t> early{2};
    CHECK_THROWS_AS((void)predict::fit_linear(s, early, lags, 1.0, 1.0), DataError);
}

TEST_CASE("persistence returns the lagged frame unscaled") {
    auto store = testing::make_store(4, 4, 2, [](std::int64_t, raster::DemandFrame& f) {
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) f.pickup(r, c) = f.dropoff(r, c) = static_cast<std::uint32_t>(r + c);
    });
    auto m = mask::build_mask(store);
    std::vector<int> lags{1, 24};
    auto model = PredictorModel::persistence(lags, 1);
    std::vector<std::int64_t> targets{24, 30, 47};
    auto e = predict::evaluate(model, targets, store, m);
    for (const auto& sm : e.samples) CHECK(sm.mse == 0.0);

    auto a = model.predict(predict::build_input(store, 30, lags, 1.0).first);
    auto b = model.predict(predict::build_input(store, 30, lags, 123.0).first);
    CHECK(a.pickup == b.pickup);
    CHECK(a.dropoff == b.dropoff);
    CHECK_THROWS_AS((void)PredictorModel::persistence(lags, 2), ConfigError);

    std::vector<int> other{1, 2};
    CHECK_THROWS_AS((void)model.predict(predict::build_input(store, 30, other, 1.0).first), ConfigError);

    predict::PersistenceTrainer trainer;
    auto fitted = trainer.fit(mask::mask_series(store, m), targets, lags);
    CHECK(fitted->lags() == lags);
}

TEST_CASE("linear predictions are clamped at zero") {
    auto store = testing::make_store(2, 2, 1, [](std::int64_t, raster::DemandFrame& f) {
        f.pickup(0, 0) = 1;
        f.dropoff(1, 1) = 2;
    });
    std::vector<int> lags{1};
    auto zero = PredictorModel::linear(lags, 1.0, 0.0, {std::vector<double>(3, 0.0), std::vector<double>(3, 0.0)});
    auto out = zero.predict(predict::build_input(store, 5, lags, 1.0).first);
    for (double v : out.pickup.values()) CHECK(v == 0.0);

    // Pre-activation is -3 + 2 * value: -1 at the active pixel, -3 elsewhere.
    auto neg = PredictorModel::linear(lags, 1.0, 0.0, {std::vector<double>{-3, 2, 0}, std::vector<double>{1, 0, 0}});
    out = neg.predict(predict::build_input(store, 5, lags, 1.0).first);
    for (double v : out.pickup.values()) CHECK(v == 0.0);
    for (double v : out.dropoff.values()) CHECK(v == 1.0);
    auto pos = PredictorModel::linear(lags, 1.0, 0.0, {std::vector<double>{-3, 5, 0}, std::vector<double>{0, 0, 0}});
    out = pos.predict(predict::build_input(store, 5, lags, 1.0).first);
    CHECK(out.pickup(0, 0) == 2.0);
    CHECK(out.pickup(0, 1) == 0.0);
    CHECK_THROWS_AS((void)PredictorModel::linear(lags, 1.0, 0.0, {std::vector<double>(2), std::vector<double>(3)}),
                    ConfigError);
}

TEST_CASE("masked metrics on small worked cases") {
    std::vector<double> truth{4, 4, 4, 4, 4};
    auto m = predict::masked_metrics(truth, truth, truth, truth);
    CHECK(m.mse == 0.0);
    CHECK(m.mae == 0.0);
    CHECK(m.max_ae == 0.0);
    CHECK(m.r2 == 1.0);

    std::vector<double> y{1, 2, 3, 4, 5}, off = y;
    off[2] += 3;
    m = predict::masked_metrics(off, y, y, y);
    CHECK(m.mse == doctest::Approx(0.9));
    CHECK(m.mae == doctest::Approx(0.3));
    CHECK(m.max_ae == 3.0);

    std::vector<double> empty, short_one{1};
    CHECK_THROWS_AS((void)predict::masked_metrics(empty, empty, empty, empty), DataError);
    CHECK_THROWS_AS((void)predict::masked_metrics(short_one, y, y, y), DataError);
    predict::EvalConfig bad;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS((void)predict::masked_metrics(y, y, y, y, bad), ConfigError);
}

TEST_CASE("masked metrics match a direct loop over channels and pixels") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 200; ++rep) {
        auto in = testing::random_metric_instance(rng, 7, 5);
        auto got = predict::masked_metrics(in.pred, in.truth, in.mask);
        auto want = testing::metric_oracle(in.pred, in.truth, in.mask.grid, 1e-8);
        CHECK(std::abs(got.mse - want.mse) <= 1e-12);
        CHECK(std::abs(got.mae - want.mae) <= 1e-12);
        CHECK(std::abs(got.max_ae - want.max_ae) <= 1e-12);
        CHECK(std::abs(got.r2 - want.r2) <= 1e-12);
        CHECK(got.max_ae >= got.mae);
        CHECK(got.mse <= got.max_ae * got.max_ae + 1e-12);
    }
}

TEST_CASE("dense and masked evaluation agree") {
    std::mt19937_64 rng(77);
    auto store = testing::make_store(6, 7, 4, [&](std::int64_t, raster::DemandFrame& f) {
        f.pickup = testing::random_image(rng, 6, 7, 9, 0.5);
        f.dropoff = testing::random_image(rng, 6, 7, 9, 0.5);
    });
    auto m = mask::build_mask(store);
    auto s = mask::mask_series(store, m);
    std::vector<int> lags{1, 2, 24};
    std::vector<std::int64_t> train, test;
    for (std::int64_t t = 24; t < 70; ++t) train.push_back(t);
    for (std::int64_t t = 70; t < 96; ++t) test.push_back(t);
    predict::LinearTrainer trainer(1e-3);
    auto fitted = trainer.fit(s, train, lags);
    auto& model = dynamic_cast<PredictorModel&>(*fitted);
    auto masked = predict::evaluate(model, test, s);
    auto dense = predict::evaluate(model, test, store, m);
    REQUIRE(masked.samples.size() == dense.samples.size());
    for (std::size_t k = 0; k < test.size(); ++k) {
        CHECK(masked.samples[k].target == test[k]);
        CHECK(masked.samples[k].mse == doctest::Approx(dense.samples[k].mse).epsilon(1e-12));
        CHECK(masked.samples[k].r2 == doctest::Approx(dense.samples[k].r2).epsilon(1e-12));
    }
    CHECK(masked.mean.mse == doctest::Approx(dense.mean.mse).epsilon(1e-12));

    std::vector<std::int64_t> one{80};
    auto single = predict::evaluate(model, one, s);
    CHECK(single.mean.mse == single.samples[0].mse);
    std::vector<std::int64_t> twice{80, 80};
    auto dup = predict::evaluate(model, twice, s);
    CHECK(dup.samples[0].mse == dup.samples[1].mse);
    CHECK(dup.samples[0].mse == single.samples[0].mse);
}

TEST_CASE("informative lags beat uninformative ones") {
    // Demand repeats daily plus noise; lag 24 carries the signal, lags 5 and 7 do not.
    std::mt19937_64 rng(12);
    auto daily = random_series(24, 20, 12, 3.0);
    mask::MaskedSeries s(24 * 30, 20);
    std::poisson_distribution<int> noise(1.0);
    for (std::size_t t = 0; t < s.hours; ++t)
        for (std::size_t i = 0; i < s.active; ++i) {
            s.pickup_at(t)[i] = daily.pickup_at(t % 24)[i] + noise(rng);
            s.dropoff_at(t)[i] = daily.dropoff_at(t % 24)[i] + noise(rng);
        }
    std::vector<std::int64_t> train, val;
    for (std::int64_t t = 48; t < 500; ++t) train.push_back(t);
    for (std::int64_t t = 500; t < 720; ++t) val.push_back(t);
    predict::LinearTrainer trainer;
    std::vector<int> good{24, 48}, bad{5, 7};
    const double good_mse = predict::evaluate(*trainer.fit(s, train, good), val, s).mean.mse;
    const double bad_mse = predict::evaluate(*trainer.fit(s, train, bad), val, s).mean.mse;
    CHECK(good_mse < bad_mse);
}

TEST_CASE("model CSV round trip") {
    auto s = random_series(100, 6, 3);
    std::vector<int> lags{1, 24};
    std::vector<std::int64_t> train{30, 40, 50, 60};
    auto model = predict::fit_linear(s, train, lags, 0.5, 9.0);
    std::stringstream io;
    predict::write_model_csv(io, model);
    auto back = predict::read_model_csv(io);
    CHECK(back.kind() == predict::ModelKind::linear);
    CHECK(back.lags() == lags);
    CHECK(back.ridge_lambda() == 0.5);
    CHECK(back.norm_factor() == 9.0);
    CHECK(back.beta() == model.beta());

    std::stringstream pio;
    predict::write_model_csv(pio, PredictorModel::persistence(lags, 24));
    auto p = predict::read_model_csv(pio);
    CHECK(p.kind() == predict::ModelKind::persistence);
    CHECK(p.persistence_lag() == 24);

    std::stringstream bad("kind,linear\nlags,1 2\nbeta_pickup,1,2\n");
    CHECK_THROWS_AS((void)predict::read_model_csv(bad), DataError);
    std::stringstream unknown("kind,cnn\n");
    CHECK_THROWS_AS((void)predict::read_model_csv(unknown), DataError);
}
