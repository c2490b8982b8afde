#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"

namespace ergodiff {

/// Uniform 1-d grid of 2*kappa+1 points z_i = offset + i*h (0-based i).
/// The default offset -kappa*h places 0 exactly at the middle point. dt is the
/// chain time step h^2 / l_scheme^2 of the locally consistent approximation.
struct Grid {
    int kappa = 0;
    double h = 0.0;
    double offset = 0.0;
    double l_scheme = 0.0;
    double dt = 0.0;
    int ref_index = 0; // index of the point nearest 0, midpoint ties to the left

    int size() const { return 2 * kappa + 1; }
    double point(int i) const { return offset + i * h; }
    double left() const { return offset; }
    double right() const { return point(size() - 1); }

    /// Nearest grid index to x, clamped to the grid; midpoint ties resolve to
    /// the left index.
    int project(double x) const {
        const double t = (x - offset) / h;
        int i = static_cast<int>(std::ceil(t - 0.5));
        if (i < 0) i = 0;
        const int n = size();
        if (i > n - 1) i = n - 1;
        return i;
    }

    bool is_interior(int i) const { return i >= 1 && i <= size() - 2; }
};

inline Grid make_grid(int kappa, double h, std::optional<double> offset, double l_scheme) {
    if (kappa < 3)
        throw ContractViolation("make_grid: kappa must be at least 3, got " +
                                std::to_string(kappa));
    if (!(h > 0.0)) throw ContractViolation("make_grid: h must be positive");
    if (!(l_scheme > 0.0)) throw ContractViolation("make_grid: l_scheme must be positive");
    Grid g;
    g.kappa = kappa;
    g.h = h;
    g.offset = offset.value_or(-static_cast<double>(kappa) * h);
    g.l_scheme = l_scheme;
    g.dt = h * h / (l_scheme * l_scheme);
    g.ref_index = g.project(0.0);
    return g;
}

/// kappa for a fixed half-width extent R: ceil(R/h).
inline int kappa_for_extent(double extent, double h) {
    return std::max(3, static_cast<int>(std::ceil(extent / h)));
}

/// kappa = ceil(h^{-1/4}) schedule.
inline int kappa_quarter_rule(double h) {
    return std::max(3, static_cast<int>(std::ceil(std::pow(h, -0.25))));
}

} // namespace ergodiff
