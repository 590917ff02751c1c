#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "gascast/errors.hpp"

namespace gascast {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw NumericalError("mean of empty range");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Population standard deviation (divide by n, not n-1).
inline double stddev_pop(std::span<const double> xs) {
    double mu = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

// Percentile by linear interpolation between closest order statistics:
// rank position = (r/100) * (n-1), zero-based. r in [0, 100].
inline double percentile_interpolated(std::vector<double> xs, double r) {
    if (xs.empty()) throw NumericalError("percentile of empty range");
    if (r < 0.0 || r > 100.0) throw UsageError("percentile rank out of [0,100]");
    std::sort(xs.begin(), xs.end());
    const double pos = (r / 100.0) * static_cast<double>(xs.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = static_cast<size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

}  // namespace gascast
