#pragma once

#include <vector>

namespace varred {

/// Least-squares fit of log(y) against log(x).
struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Fit y ≈ C x^slope from positive samples; requires at least two points.
PowerFit loglog_fit(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace varred
