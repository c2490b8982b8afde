#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "errors.hpp"
#include "noise.hpp"
#include "quadrature.hpp"

namespace ergodiff {

/// Expected second-price auction payoff
///
///   r(x, a) = E[ (e2 - x v e4) 1{a e2 >= x v e4} ]
///
/// for reserve price x and shading factor a. The e4 integral is evaluated in
/// closed form (uniform or point-mass competition); the remaining e2 integral
/// runs on an adaptive Gauss-Legendre rule pre-split at the integrand kinks,
/// with unbounded marginals truncated at their 1e-10 tail quantiles.
class AuctionReward {
public:
    explicit AuctionReward(const NoiseLaw& law, double rel_tol = 1e-8)
        : e2_(law.e2), e4_(law.e4), rel_tol_(rel_tol) {
        if (e4_.kind != Marginal::Kind::Uniform && e4_.kind != Marginal::Kind::PointMass)
            throw ConfigError("auction reward: competition marginal must be uniform or "
                              "point_mass for the closed-form inner integral, got " +
                              e4_.describe());
        if (e2_.is_continuous()) {
            lo_ = e2_.quantile(1e-10);
            hi_ = e2_.quantile(1.0 - 1e-10);
            lo_ = std::max(lo_, 0.0);
        }
    }

    double operator()(double x, double a) const {
        switch (e2_.kind) {
        case Marginal::Kind::PointMass: return inner(e2_.p1, x, a * e2_.p1);
        case Marginal::Kind::TwoPoint:
            return e2_.p2 * inner(e2_.p1, x, a * e2_.p1) +
                   (1.0 - e2_.p2) * inner(e2_.p3, x, a * e2_.p3);
        default: break;
        }
        auto f = [&](double v) { return inner(v, x, a * v) * e2_.pdf(v); };
        std::vector<double> pts;
        pts.push_back(lo_);
        if (a > 0.0) {
            // B = a*v crosses x, and the uniform support edges of e4
            for (double kink : {x / a, e4_lo() / a, e4_hi() / a})
                if (kink > lo_ && kink < hi_) pts.push_back(kink);
        }
        pts.push_back(hi_);
        std::sort(pts.begin(), pts.end());
        auto res = integrate_adaptive(f, pts, rel_tol_);
        const double scale = std::max(std::abs(res.value), 1e-12);
        if (res.abs_error > 64.0 * rel_tol_ * scale + 1e-14)
            throw NumericalError("auction reward quadrature did not converge: achieved error " +
                                 std::to_string(res.abs_error) + " at (x=" + std::to_string(x) +
                                 ", a=" + std::to_string(a) + ")");
        return res.value;
    }

private:
    double e4_lo() const { return e4_.kind == Marginal::Kind::Uniform ? e4_.p1 : e4_.p1; }
    double e4_hi() const { return e4_.kind == Marginal::Kind::Uniform ? e4_.p2 : e4_.p1; }

    /// E over e4 of (v - x v e4) 1{B >= x v e4} for a fixed retail value v and
    /// bid B. Piecewise polynomial in (x, B).
    double inner(double v, double x, double B) const {
        if (e4_.kind == Marginal::Kind::PointMass) {
            const double m = std::max(x, e4_.p1);
            return B >= m ? v - m : 0.0;
        }
        const double lo = e4_.p1, hi = e4_.p2;
        double acc = 0.0;
        // u <= x: clearing price is x
        const double xa = std::clamp(x, lo, hi);
        if (B >= x && xa > lo) acc += (v - x) * (xa - lo);
        // u > x: clearing price is u, win while u <= B
        const double u0 = xa;
        const double u1 = std::min(hi, B);
        if (u1 > u0) acc += v * (u1 - u0) - 0.5 * (u1 * u1 - u0 * u0);
        return acc / (hi - lo);
    }

    Marginal e2_, e4_;
    double rel_tol_;
    double lo_ = 0.0, hi_ = 0.0;
};

/// Sup norm of a reward over [-extent, extent] x A by grid scan; used for
/// solver stopping diagnostics and the |rho| <= ||r|| check.
inline double reward_sup_norm(const std::function<double(double, double)>& r, double a_lo,
                              double a_hi, double extent, int nx = 201, int na = 21) {
    double best = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = -extent + 2.0 * extent * i / (nx - 1);
        for (int j = 0; j < na; ++j) {
            const double a = a_lo + (a_hi - a_lo) * (na == 1 ? 0.0 : double(j) / (na - 1));
            best = std::max(best, std::abs(r(x, a)));
        }
    }
    return best;
}

} // namespace ergodiff
