#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "quadrature.hpp"

namespace ergodiff {

/// Polynomial bump density phi(u) = (35/32)(1-u^2)^3 on (-1,1), scaled to
/// phi_n(u) = n phi(n u). Closed-form first and second derivatives; being a
/// degree-6 polynomial it integrates exactly under the fixed Gauss rule.
struct Mollifier {
    int n = 1;

    static constexpr double c = 35.0 / 32.0;

    double radius() const { return 1.0 / n; }

    static double phi(double t) {
        if (std::abs(t) >= 1.0) return 0.0;
        const double s = 1.0 - t * t;
        return c * s * s * s;
    }
    static double phi_d1(double t) {
        if (std::abs(t) >= 1.0) return 0.0;
        const double s = 1.0 - t * t;
        return -6.0 * c * t * s * s;
    }
    static double phi_d2(double t) {
        if (std::abs(t) >= 1.0) return 0.0;
        const double s = 1.0 - t * t;
        return -6.0 * c * s * (s - 4.0 * t * t);
    }

    double value(double u) const { return n * phi(n * u); }
    double d1(double u) const { return static_cast<double>(n) * n * phi_d1(n * u); }
    double d2(double u) const { return static_cast<double>(n) * n * n * phi_d2(n * u); }
};

inline Mollifier make_mollifier(int n) {
    if (n < 1) throw ContractViolation("make_mollifier: n must be at least 1");
    return Mollifier{n};
}

enum class Interp { PiecewiseLinear, NearestNeighbor };

/// C^2 smoothing of a grid value profile by convolution with phi_n:
///
///   w_n(x) = integral w~(y) phi_n(y - x) dy,
///
/// where w~ is the normalized grid profile (value minus rho*dt), extended by
/// its endpoint values outside the grid. Derivatives transfer onto the kernel:
/// D w_n uses -phi_n', D^2 w_n uses phi_n''. Integrals run on order-32
/// Gauss-Legendre panels split at the profile's knots inside the window, which
/// is exact for the piecewise-linear profile against the polynomial kernel.
class MollifiedValue {
public:
    struct Derivs {
        double value = 0.0, d1 = 0.0, d2 = 0.0;
    };

    static MollifiedValue from_solution(const Grid& g, std::span<const double> w,
                                        double normalization, int n,
                                        Interp interp = Interp::PiecewiseLinear) {
        if (static_cast<int>(w.size()) != g.size())
            throw ContractViolation("MollifiedValue: value vector length mismatch");
        MollifiedValue mv;
        mv.phi_ = make_mollifier(n);
        mv.interp_ = interp;
        mv.grid_ = g;
        mv.values_.assign(w.begin(), w.end());
        for (double& v : mv.values_) v -= normalization;
        mv.knots_.resize(static_cast<std::size_t>(g.size()));
        for (int i = 0; i < g.size(); ++i) mv.knots_[static_cast<std::size_t>(i)] = g.point(i);
        mv.from_grid_ = true;
        return mv;
    }

    /// Analytic profile, mainly for tests: optional knots mark kinks.
    static MollifiedValue from_function(std::function<double(double)> f, int n,
                                        std::vector<double> knots = {}) {
        MollifiedValue mv;
        mv.phi_ = make_mollifier(n);
        mv.fn_ = std::move(f);
        mv.knots_ = std::move(knots);
        std::sort(mv.knots_.begin(), mv.knots_.end());
        mv.from_grid_ = false;
        return mv;
    }

    const Mollifier& mollifier() const { return phi_; }

    /// Base profile w~ before smoothing.
    double base(double y) const {
        if (!from_grid_) return fn_(y);
        const int n = grid_.size();
        if (y <= grid_.left()) return values_.front();
        if (y >= grid_.right()) return values_.back();
        if (interp_ == Interp::NearestNeighbor)
            return values_[static_cast<std::size_t>(grid_.project(y))];
        const double t = (y - grid_.offset) / grid_.h;
        int i = static_cast<int>(std::floor(t));
        i = std::clamp(i, 0, n - 2);
        const double frac = t - i;
        return (1.0 - frac) * values_[static_cast<std::size_t>(i)] +
               frac * values_[static_cast<std::size_t>(i + 1)];
    }

    Derivs derivs(double x) const {
        Derivs out;
        integrate(x, &out);
        return out;
    }

    double value(double x) const {
        Derivs out;
        integrate(x, &out, /*value_only=*/true);
        return out.value;
    }

private:
    void integrate(double x, Derivs* out, bool value_only = false) const {
        const double r = phi_.radius();
        const double lo = x - r, hi = x + r;
        // per-thread scratch keeps evaluation safe from any number of workers
        static thread_local std::vector<double> segments;
        segments.clear();
        segments.push_back(lo);
        const auto first = std::upper_bound(knots_.begin(), knots_.end(), lo);
        for (auto it = first; it != knots_.end() && *it < hi; ++it) segments.push_back(*it);
        segments.push_back(hi);

        const auto& rule = gauss_legendre(32);
        double v = 0.0, d1 = 0.0, d2 = 0.0;
        for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
            const double a = segments[s], b = segments[s + 1];
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            if (half <= 0.0) continue;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double y = mid + half * rule.nodes[q];
                const double wq = rule.weights[q] * half;
                const double base_y = base(y);
                const double u = y - x;
                v += wq * base_y * phi_.value(u);
                if (!value_only) {
                    d1 += wq * base_y * (-phi_.d1(u));
                    d2 += wq * base_y * phi_.d2(u);
                }
            }
        }
        out->value = v;
        out->d1 = d1;
        out->d2 = d2;
    }

    Mollifier phi_;
    Interp interp_ = Interp::PiecewiseLinear;
    Grid grid_{};
    std::vector<double> values_;
    std::vector<double> knots_;
    std::function<double(double)> fn_;
    bool from_grid_ = true;
};

/// (value, Dw, D^2w) of the smoothed profile at x.
inline MollifiedValue::Derivs mollified_derivs(const MollifiedValue& mv, double x) {
    return mv.derivs(x);
}

} // namespace ergodiff
