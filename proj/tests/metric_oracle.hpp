#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gridlag/image.hpp"
#include "gridlag/mask.hpp"
#include "gridlag/predict.hpp"

namespace testing {

/// Masked metrics written straight from the definitions: loops over the two
/// channels, then rows, then columns, testing the mask at each pixel.
inline gridlag::predict::SampleMetrics metric_oracle(const gridlag::predict::Prediction& pred,
                                                     const gridlag::predict::TargetPair& truth,
                                                     const gridlag::Image<std::uint8_t>& mask, double eps) {
    const gridlag::RealImage* p[2] = {&pred.pickup, &pred.dropoff};
    const gridlag::CountImage* y[2] = {&truth.pickup, &truth.dropoff};
    double active = 0;
    for (std::size_t r = 0; r < mask.rows(); ++r)
        for (std::size_t c = 0; c < mask.cols(); ++c) active += mask(r, c);
    double mean[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
        for (std::size_t r = 0; r < mask.rows(); ++r)
            for (std::size_t c = 0; c < mask.cols(); ++c)
                if (mask(r, c)) mean[k] += (*y[k])(r, c);
        mean[k] /= active;
    }
    double se = 0, ae = 0, mx = 0, tot = 0;
    for (int k = 0; k < 2; ++k)
        for (std::size_t r = 0; r < mask.rows(); ++r)
            for (std::size_t c = 0; c < mask.cols(); ++c) {
                if (!mask(r, c)) continue;
                const double e = (*p[k])(r, c) - (*y[k])(r, c);
                se += e * e;
                ae += std::abs(e);
                mx = std::max(mx, std::abs(e));
                tot += ((*y[k])(r, c) - mean[k]) * ((*y[k])(r, c) - mean[k]);
            }
    gridlag::predict::SampleMetrics m;
    m.mse = se / (2 * active);
    m.mae = ae / (2 * active);
    m.max_ae = mx;
    m.r2 = 1.0 - se / (tot + eps);
    return m;
}

/// One random H x W instance with at least one active pixel.
struct MetricInstance {
    gridlag::predict::Prediction pred;
    gridlag::predict::TargetPair truth;
    gridlag::mask::ActivityMask mask;
};

inline MetricInstance random_metric_instance(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> pv(0.0, 20.0);
    std::uniform_int_distribution<std::uint32_t> yv(0, 20);
    std::bernoulli_distribution on(0.6);
    MetricInstance in{{gridlag::RealImage(rows, cols), gridlag::RealImage(rows, cols)},
                      {gridlag::CountImage(rows, cols), gridlag::CountImage(rows, cols)},
                      {}};
    gridlag::Image<std::uint8_t> grid(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            in.pred.pickup(r, c) = pv(rng);
            in.pred.dropoff(r, c) = pv(rng);
            in.truth.pickup(r, c) = yv(rng);
            in.truth.dropoff(r, c) = yv(rng);
            grid(r, c) = on(rng);
        }
    grid(rng() % rows, rng() % cols) = 1;
    in.mask = gridlag::mask::from_activity(grid);
    return in;
}

}  // namespace testing
