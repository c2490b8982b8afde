#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "errors.hpp"
#include "random.hpp"

namespace ergodiff {

/// One draw of the driving noise e = (e1, e2, e3, e4).
using Noise4 = std::array<double, 4>;

/// A univariate marginal from the supported closed-form families.
///
/// Parameter conventions:
///   uniform(lo, hi)          p1 = lo, p2 = hi
///   lognormal(m, s)          log has mean m, standard deviation s
///   normal(m, var)           p1 = mean, p2 = variance
///   point_mass(v)            p1 = v
///   two_point(v1, p, v2)     value v1 w.p. p, else v2
struct Marginal {
    enum class Kind { Uniform, LogNormal, Normal, PointMass, TwoPoint };

    Kind kind = Kind::PointMass;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;

    static Marginal uniform(double lo, double hi) {
        if (!(hi > lo)) throw ConfigError("uniform marginal requires hi > lo");
        return {Kind::Uniform, lo, hi, 0.0};
    }
    static Marginal lognormal(double m, double s) {
        if (!(s > 0.0)) throw ConfigError("lognormal marginal requires s > 0");
        return {Kind::LogNormal, m, s, 0.0};
    }
    static Marginal normal(double m, double var) {
        if (!(var >= 0.0)) throw ConfigError("normal marginal requires var >= 0");
        return {Kind::Normal, m, var, 0.0};
    }
    static Marginal point_mass(double v) { return {Kind::PointMass, v, 0.0, 0.0}; }
    static Marginal two_point(double v1, double p, double v2) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("two_point marginal requires p in [0,1]");
        return {Kind::TwoPoint, v1, p, v2};
    }

    double mean() const {
        switch (kind) {
        case Kind::Uniform: return 0.5 * (p1 + p2);
        case Kind::LogNormal: return std::exp(p1 + 0.5 * p2 * p2);
        case Kind::Normal: return p1;
        case Kind::PointMass: return p1;
        case Kind::TwoPoint: return p2 * p1 + (1.0 - p2) * p3;
        }
        throw NumericalError("unsupported marginal in mean()");
    }

    double second_moment() const {
        switch (kind) {
        case Kind::Uniform: return (p1 * p1 + p1 * p2 + p2 * p2) / 3.0;
        case Kind::LogNormal: return std::exp(2.0 * p1 + 2.0 * p2 * p2);
        case Kind::Normal: return p1 * p1 + p2;
        case Kind::PointMass: return p1 * p1;
        case Kind::TwoPoint: return p2 * p1 * p1 + (1.0 - p2) * p3 * p3;
        }
        throw NumericalError("unsupported marginal in second_moment()");
    }

    double sample(Engine& g) const {
        switch (kind) {
        case Kind::Uniform: return uniform_in(g, p1, p2);
        case Kind::LogNormal: return std::exp(p1 + p2 * standard_normal(g));
        case Kind::Normal: return p1 + std::sqrt(p2) * standard_normal(g);
        case Kind::PointMass: return p1;
        case Kind::TwoPoint: return uniform01(g) < p2 ? p1 : p3;
        }
        throw NumericalError("unsupported marginal in sample()");
    }

    bool is_continuous() const {
        return kind == Kind::Uniform || kind == Kind::LogNormal || kind == Kind::Normal;
    }

    /// Density for continuous families.
    double pdf(double x) const {
        constexpr double inv_sqrt_2pi = 0.39894228040143267794;
        switch (kind) {
        case Kind::Uniform: return (x >= p1 && x <= p2) ? 1.0 / (p2 - p1) : 0.0;
        case Kind::LogNormal: {
            if (x <= 0.0) return 0.0;
            const double z = (std::log(x) - p1) / p2;
            return inv_sqrt_2pi / (x * p2) * std::exp(-0.5 * z * z);
        }
        case Kind::Normal: {
            const double sd = std::sqrt(p2);
            const double z = (x - p1) / sd;
            return inv_sqrt_2pi / sd * std::exp(-0.5 * z * z);
        }
        default: throw ContractViolation("pdf() requires a continuous marginal");
        }
    }

    /// Quantile for continuous families (inverse normal via Acklam's rational
    /// approximation, |rel err| < 1.2e-9).
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw ContractViolation("quantile requires p in (0,1)");
        switch (kind) {
        case Kind::Uniform: return p1 + (p2 - p1) * p;
        case Kind::LogNormal: return std::exp(p1 + p2 * inverse_normal_cdf(p));
        case Kind::Normal: return p1 + std::sqrt(p2) * inverse_normal_cdf(p);
        default: throw ContractViolation("quantile() requires a continuous marginal");
        }
    }

    std::string describe() const {
        char buf[96];
        switch (kind) {
        case Kind::Uniform: std::snprintf(buf, sizeof buf, "uniform(%g,%g)", p1, p2); break;
        case Kind::LogNormal: std::snprintf(buf, sizeof buf, "lognormal(%g,%g)", p1, p2); break;
        case Kind::Normal: std::snprintf(buf, sizeof buf, "normal(%g,%g)", p1, p2); break;
        case Kind::PointMass: std::snprintf(buf, sizeof buf, "point_mass(%g)", p1); break;
        case Kind::TwoPoint: std::snprintf(buf, sizeof buf, "two_point(%g,%g,%g)", p1, p2, p3); break;
        }
        return buf;
    }

    static double inverse_normal_cdf(double p) {
        static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                       -2.759285104469687e+02, 1.383577518672690e+02,
                                       -3.066479806614716e+01, 2.506628277459239e+00};
        static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                       -1.556989798598866e+02, 6.680131188771972e+01,
                                       -1.328068155288572e+01};
        static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                       -2.400758277161838e+00, -2.549732539343734e+00,
                                       4.374664141464968e+00,  2.938163982698783e+00};
        static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                       2.445134137142996e+00, 3.754408661907416e+00};
        const double plow = 0.02425;
        if (p < plow) {
            const double q = std::sqrt(-2.0 * std::log(p));
            return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        if (p > 1.0 - plow) {
            const double q = std::sqrt(-2.0 * std::log(1.0 - p));
            return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
};

/// Product law of the four independent noise coordinates:
///   e1  seller aggressivity on [0,1]
///   e2  retail value on R+
///   e3  seller randomization, mean zero
///   e4  competition bid on [0,1]
struct NoiseLaw {
    Marginal e1, e2, e3, e4;

    const Marginal& coord(int k) const {
        switch (k) {
        case 0: return e1;
        case 1: return e2;
        case 2: return e3;
        case 3: return e4;
        }
        throw ContractViolation("NoiseLaw::coord index out of range");
    }

    /// Benchmark law: e1~Unif(0,1), e2~LogNorm(0,1/2), e3~N(0,1/4), e4~Unif(0,1).
    static NoiseLaw benchmark() {
        return {Marginal::uniform(0.0, 1.0), Marginal::lognormal(0.0, 0.5),
                Marginal::normal(0.0, 0.25), Marginal::uniform(0.0, 1.0)};
    }

    /// Structural requirements: E[e1] > 0 (mean reversion) and E[e1 e3] = 0,
    /// which under independence reduces to E[e3] = 0.
    void validate() const {
        if (!(e1.mean() > 0.0))
            throw ConfigError("noise law: E[e1] must be positive, got marginal_1 = " +
                              e1.describe());
        if (std::abs(e3.mean()) > 1e-12)
            throw ConfigError("noise law: E[e1*e3] must vanish; marginal_3 = " + e3.describe() +
                              " has nonzero mean");
    }
};

/// Moments used by the limit model: n1 = E[e1], n2 = E[e1 e2],
/// sigma_bar_sq = E[(e1 e3)^2]; closed forms under independence.
struct NoiseMoments {
    double n1, n2, sigma_bar_sq;
};

inline NoiseMoments noise_moments(const NoiseLaw& law) {
    NoiseMoments m;
    m.n1 = law.e1.mean();
    m.n2 = law.e1.mean() * law.e2.mean();
    m.sigma_bar_sq = law.e1.second_moment() * law.e3.second_moment();
    return m;
}

/// Four independent engines, one per coordinate, derived from a single seed.
/// Each coordinate consumes only its own stream, so adding draws to one
/// marginal never perturbs the others.
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed)
        : eng_{make_engine(derive_seed(seed, 0xE1)), make_engine(derive_seed(seed, 0xE2)),
               make_engine(derive_seed(seed, 0xE3)), make_engine(derive_seed(seed, 0xE4))} {}

    Engine& coord(int k) { return eng_[static_cast<std::size_t>(k)]; }

private:
    std::array<Engine, 4> eng_;
};

inline Noise4 sample_noise(const NoiseLaw& law, NoiseStream& stream) {
    return {law.e1.sample(stream.coord(0)), law.e2.sample(stream.coord(1)),
            law.e3.sample(stream.coord(2)), law.e4.sample(stream.coord(3))};
}

} // namespace ergodiff
