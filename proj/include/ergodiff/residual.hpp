#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "mollify.hpp"
#include "noise.hpp"

namespace ergodiff {

/// Twice-differentiable value profile handed to the residual estimator:
/// cheap value lookups plus full derivative queries.
struct C2Function {
    std::function<double(double)> value;
    std::function<MollifiedValue::Derivs(double)> derivs;

    static C2Function from_mollified(const MollifiedValue& mv) {
        return {[&mv](double x) { return mv.value(x); },
                [&mv](double x) { return mv.derivs(x); }};
    }
};

struct DeltaR {
    double value = 0.0;
    double std_error = 0.0; // Monte-Carlo error of the generator term
};

/// Second-order Taylor defect of the jump generator against the diffusion
/// generator on a fixed C^2 profile w:
///
///   (1/eps) E[ w(x + b_eps(x,a,e)) - w(x) ] - Dw(x) mu(x,a) - sigma^2/2 D^2w(x)
///
/// estimated over num_mc noise draws. This defect drives every approximation
/// error in the scheme, so it doubles as a numerical diagnostic.
inline DeltaR delta_r_residual(const C2Function& w, const JumpModel& jump,
                               const DiffusionModel& diff, double x, double a, int num_mc,
                               NoiseStream& stream) {
    if (!jump.control_set.contains(a))
        throw ContractViolation("delta_r_residual: action outside control set");
    if (num_mc < 1) throw ContractViolation("delta_r_residual: num_mc must be positive");
    const double w0 = w.value(x);
    const MollifiedValue::Derivs d = w.derivs(x);
    double acc = 0.0, acc2 = 0.0;
    for (int s = 0; s < num_mc; ++s) {
        const Noise4 e = sample_noise(jump.noise, stream);
        const double dw = w.value(x + jump_increment(jump, x, a, e)) - w0;
        acc += dw;
        acc2 += dw * dw;
    }
    const double mean = acc / num_mc;
    const double var = std::max(0.0, acc2 / num_mc - mean * mean);
    DeltaR out;
    out.value = mean / jump.epsilon - d.d1 * diff.drift(x, a) -
                0.5 * diff.sigma * diff.sigma * d.d2;
    out.std_error = std::sqrt(var / num_mc) / jump.epsilon;
    return out;
}

/// One probe of the coupled-contraction / Lyapunov diagnostics.
struct AssumptionProbe {
    double x = 0.0, x_prime = 0.0, action = 0.0;
    double zeta = 0.0;        // |x - x'|^{2p}
    double d_zeta = 0.0;      // eta E[zeta(x+b, x'+b) - zeta]  (coupled, same e)
    double d_zeta_se = 0.0;
    double contraction_ratio = 0.0; // d_zeta / zeta (0 when zeta = 0)
    double xi = 0.0;          // |x|^{2p}
    double d_xi = 0.0;        // eta E[xi(x+b) - xi]
    double d_xi_se = 0.0;
};

struct AssumptionReport {
    int p = 1;
    std::vector<AssumptionProbe> probes;
    double worst_contraction_ratio = 0.0; // max over probes with zeta > 0
    double lyapunov_c1 = 0.0;             // fit D_xi ~ -c1 xi + c2
    double lyapunov_c2 = 0.0;
    bool contraction_violation = false;   // worst ratio > -c_min
    double c_min = 0.0;
};

/// Monte-Carlo check of the contraction drift (coupled pairs, common noise)
/// and the Lyapunov drift for zeta(x,x') = |x-x'|^{2p}, xi(x) = |x|^{2p}.
/// Reports the fitted constants rather than pass/fail against fixed values;
/// `c_min` flags probes whose contraction rate is weaker than -c_min.
inline AssumptionReport check_assumptions(const JumpModel& model, int p, int num_mc,
                                          std::span<const std::pair<double, double>> probe_pairs,
                                          NoiseStream& stream,
                                          std::span<const double> probe_actions = {},
                                          double c_min = 0.0) {
    if (p < 1) throw ContractViolation("check_assumptions: p must be at least 1");
    if (num_mc < 1) throw ContractViolation("check_assumptions: num_mc must be positive");
    const double eta = model.intensity();
    const double exponent = 2.0 * p;
    std::vector<double> actions(probe_actions.begin(), probe_actions.end());
    if (actions.empty())
        actions = {model.control_set.lo, 0.5 * (model.control_set.lo + model.control_set.hi),
                   model.control_set.hi};

    AssumptionReport rep;
    rep.p = p;
    rep.c_min = c_min;
    rep.worst_contraction_ratio = -1e300;

    for (const auto& [x, xp] : probe_pairs) {
        for (const double a : actions) {
            AssumptionProbe probe;
            probe.x = x;
            probe.x_prime = xp;
            probe.action = a;
            probe.zeta = std::pow(std::abs(x - xp), exponent);
            probe.xi = std::pow(std::abs(x), exponent);
            double acc_z = 0.0, acc_z2 = 0.0, acc_xi = 0.0, acc_xi2 = 0.0;
            for (int s = 0; s < num_mc; ++s) {
                const Noise4 e = sample_noise(model.noise, stream);
                const double bx = jump_increment(model, x, a, e);
                const double bxp = jump_increment(model, xp, a, e); // coupled: same e
                const double dz = std::pow(std::abs((x + bx) - (xp + bxp)), exponent) - probe.zeta;
                const double dxi = std::pow(std::abs(x + bx), exponent) - probe.xi;
                acc_z += dz;
                acc_z2 += dz * dz;
                acc_xi += dxi;
                acc_xi2 += dxi * dxi;
            }
            const double mz = acc_z / num_mc;
            const double mxi = acc_xi / num_mc;
            probe.d_zeta = eta * mz;
            probe.d_xi = eta * mxi;
            probe.d_zeta_se =
                eta * std::sqrt(std::max(0.0, acc_z2 / num_mc - mz * mz) / num_mc);
            probe.d_xi_se =
                eta * std::sqrt(std::max(0.0, acc_xi2 / num_mc - mxi * mxi) / num_mc);
            probe.contraction_ratio = probe.zeta > 0.0 ? probe.d_zeta / probe.zeta : 0.0;
            if (probe.zeta > 0.0)
                rep.worst_contraction_ratio =
                    std::max(rep.worst_contraction_ratio, probe.contraction_ratio);
            rep.probes.push_back(probe);
        }
    }

    // affine least squares D_xi ~ alpha xi + beta over all probes
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(rep.probes.size());
    for (const auto& probe : rep.probes) {
        sx += probe.xi;
        sy += probe.d_xi;
        sxx += probe.xi * probe.xi;
        sxy += probe.xi * probe.d_xi;
    }
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) > 1e-30) {
        const double alpha = (m * sxy - sx * sy) / denom;
        rep.lyapunov_c1 = -alpha;
        rep.lyapunov_c2 = (sy - alpha * sx) / m;
    }
    rep.contraction_violation =
        rep.worst_contraction_ratio > -c_min && rep.worst_contraction_ratio > -1e299;
    return rep;
}

} // namespace ergodiff
