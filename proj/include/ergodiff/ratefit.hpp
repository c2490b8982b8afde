#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "errors.hpp"

namespace ergodiff {

/// Least-squares power-law fit y = exp(intercept) * x^slope on log-log axes.
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0; // natural log units
    double r_squared = 0.0;
    int points_used = 0;
};

inline RateFit fit_rate(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 3)
        throw ContractViolation("fit_rate: need at least 3 points, got " +
                                std::to_string(pairs.size()));
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : pairs) {
        if (!(x > 0.0) || !(y > 0.0))
            throw ContractViolation("fit_rate: all coordinates must be positive");
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double m = static_cast<double>(pairs.size());
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) throw ContractViolation("fit_rate: degenerate abscissae");
    RateFit fit;
    fit.points_used = static_cast<int>(pairs.size());
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;
    const double ss_tot = syy - sy * sy / m;
    double ss_res = 0.0;
    for (const auto& [x, y] : pairs) {
        const double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
        ss_res += r * r;
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace ergodiff
