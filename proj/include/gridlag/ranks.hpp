#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace gridlag {

/// 1-based ascending ranks; tied values share the mean of their positions.
/// NaN sorts after every number (and NaNs tie with each other).
[[nodiscard]] inline std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        const double x = values[a], y = values[b];
        if (std::isnan(x)) return false;
        if (std::isnan(y)) return true;
        return x < y;
    };
    std::stable_sort(order.begin(), order.end(), less);
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && !less(order[i], order[j]) && !less(order[j], order[i])) ++j;
        const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

}  // namespace gridlag
