#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "errors.hpp"
#include "noise.hpp"
#include "reward.hpp"

namespace ergodiff {

/// Compact control interval A = [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double a) const { return a >= lo && a <= hi; }
    double clamp(double a) const { return a < lo ? lo : (a > hi ? hi : a); }
    double width() const { return hi - lo; }
};

/// Controlled pure-jump dynamics: jumps arrive at rate 1/epsilon and move the
/// state by eps*b1(x,a,e) + sqrt(eps)*b2(x,e). User models supply b1, b2 and
/// the expected per-jump reward as callbacks together with the noise law.
struct JumpModel {
    NoiseLaw noise;
    double epsilon = 0.5; // scale in (0,1)
    Interval control_set{0.0, 1.0};
    std::function<double(double, double, const Noise4&)> b1; // (x, a, e)
    std::function<double(double, const Noise4&)> b2;         // (x, e)
    std::function<double(double, double)> reward;            // r(x, a)

    double intensity() const { return 1.0 / epsilon; }

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw ConfigError("jump model: epsilon must lie in (0,1), got " +
                              std::to_string(epsilon));
        if (!(control_set.hi >= control_set.lo))
            throw ConfigError("jump model: empty control interval");
        if (!b1 || !b2 || !reward) throw ConfigError("jump model: b1, b2, reward must be set");
        noise.validate();
    }
};

/// Limit diffusion dX = mu(X,a) dt + sigma dW with constant volatility and a
/// shared reward. The auction family uses the mean-reverting drift
/// mu(x,a) = n1 (c_bar a - x) with c_bar = n2/n1.
struct DiffusionModel {
    double c_bar = 0.0;
    double mean_reversion = 0.0;
    double sigma = 0.0;
    Interval control_set{0.0, 1.0};
    std::function<double(double, double)> drift;  // mu(x, a)
    std::function<double(double, double)> reward; // r(x, a)

    void validate() const {
        if (!(sigma > 0.0)) throw ConfigError("diffusion model: sigma must be positive");
        if (!drift || !reward) throw ConfigError("diffusion model: drift, reward must be set");
    }
};

/// Size of one jump: eps*b1 + sqrt(eps)*b2.
inline double jump_increment(const JumpModel& m, double x, double a, const Noise4& e) {
    if (!m.control_set.contains(a))
        throw ContractViolation("jump_increment: action " + std::to_string(a) +
                                " outside control set [" + std::to_string(m.control_set.lo) +
                                ", " + std::to_string(m.control_set.hi) + "]");
    return m.epsilon * m.b1(x, a, e) + std::sqrt(m.epsilon) * m.b2(x, e);
}

struct DriftVol {
    double mu;
    double sigma;
};

inline DriftVol drift_and_vol(const DiffusionModel& m, double x, double a) {
    if (!m.control_set.contains(a))
        throw ContractViolation("drift_and_vol: action " + std::to_string(a) +
                                " outside control set");
    return {m.drift(x, a), m.sigma};
}

/// Built-in benchmark preset name.
inline constexpr const char* kAuctionPresetName = "auction-v1";

/// Repeated second-price auction with mean-reverting reserve price:
/// b1(x,a,e) = e1 (a e2 - x), b2(x,e) = e1 e3.
inline JumpModel make_auction_jump(double epsilon, const NoiseLaw& law = NoiseLaw::benchmark(),
                                   double quad_rel_tol = 1e-8) {
    JumpModel m;
    m.noise = law;
    m.epsilon = epsilon;
    m.control_set = {0.0, 1.0};
    m.b1 = [](double x, double a, const Noise4& e) { return e[0] * (a * e[1] - x); };
    m.b2 = [](double, const Noise4& e) { return e[0] * e[2]; };
    m.reward = AuctionReward(law, quad_rel_tol);
    m.validate();
    return m;
}

/// Diffusive limit of the auction dynamics: mu(x,a) = n1 (c_bar a - x),
/// sigma^2 = E[(e1 e3)^2], with moments in closed form from the law.
inline DiffusionModel make_auction_diffusion(const NoiseLaw& law = NoiseLaw::benchmark(),
                                             double quad_rel_tol = 1e-8) {
    const NoiseMoments mom = noise_moments(law);
    DiffusionModel m;
    m.mean_reversion = mom.n1;
    m.c_bar = mom.n2 / mom.n1;
    m.sigma = std::sqrt(mom.sigma_bar_sq);
    m.control_set = {0.0, 1.0};
    const double n1 = mom.n1, cb = m.c_bar;
    m.drift = [n1, cb](double x, double a) { return n1 * (cb * a - x); };
    m.reward = AuctionReward(law, quad_rel_tol);
    m.validate();
    return m;
}

/// Drift/volatility consistency of a diffusion model against a parent law:
/// c_bar = n2/n1 and sigma^2 = E[(e1 e3)^2].
struct ConsistencyReport {
    double c_bar_expected, c_bar_actual;
    double sigma_sq_expected, sigma_sq_actual;
    bool ok;
};

inline ConsistencyReport check_diffusion_consistency(const DiffusionModel& m, const NoiseLaw& law,
                                                     double tol = 1e-9) {
    const NoiseMoments mom = noise_moments(law);
    ConsistencyReport rep{};
    rep.c_bar_expected = mom.n2 / mom.n1;
    rep.c_bar_actual = m.c_bar;
    rep.sigma_sq_expected = mom.sigma_bar_sq;
    rep.sigma_sq_actual = m.sigma * m.sigma;
    rep.ok = std::abs(rep.c_bar_expected - rep.c_bar_actual) <= tol &&
             std::abs(rep.sigma_sq_expected - rep.sigma_sq_actual) <= tol;
    return rep;
}

} // namespace ergodiff
