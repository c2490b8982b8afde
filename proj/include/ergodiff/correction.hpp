#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "mollify.hpp"
#include "residual.hpp"
#include "solvers.hpp"

namespace ergodiff {

struct CorrectionResult {
    double delta_rho = 0.0;
    std::vector<double> delta_w;
    double rho_corrected = 0.0; // base rho + eps^{gamma0/2} delta_rho
    double f_max = 0.0;         // largest slack of the base optimality defect
    ErgodicSolution raw;        // full solution of the correction fixed point
};

struct CorrectionOptions {
    double gamma0 = 1.0;
    double tol = 1e-9;
    long max_iter = 1000000;
    int mollifier_n = 8;
    int num_mc = 500;
    std::uint64_t seed = 1;
};

/// First-order correction of the diffusive ergodic value: solves the auxiliary
/// ergodic fixed point with running reward
///
///   eps^{-gamma0/2} ( delta_r(z, a) + f(z, a) ),
///   f(z, a) = L^a w_base(z) + r(z, a) - rho_base,
///
/// where delta_r is the Monte-Carlo generator defect of the mollified base
/// value and f is evaluated through the same kernel rows the base solve used
/// (so f <= 0 up to solver tolerance at every state, boundary rows included).
/// Returns delta_rho and the corrected value rho_base + eps^{gamma0/2} delta_rho.
inline CorrectionResult correction_solve(const Grid& g, const DiffusionModel& model,
                                         const ErgodicSolution& base, const JumpModel& jump,
                                         const ControlGrid& cg, const CorrectionOptions& opt) {
    if (static_cast<int>(base.w.size()) != g.size())
        throw ContractViolation("correction_solve: base solution does not match grid");
    if (!(opt.gamma0 > 0.0)) throw ContractViolation("correction_solve: gamma0 must be positive");

    DiffusiveProblem p = compile_problem(g, model, cg);
    const int ns = p.ns(), na = p.na();

    // optimality slack of the base solution; must be nonpositive up to the
    // solver's fixed-point tolerance
    RewardTable f;
    f.ns = ns;
    f.na = na;
    f.v.resize(static_cast<std::size_t>(ns) * na);
    double f_max = -1e300;
    for (int j = 0; j < na; ++j)
        for (int i = 0; i < ns; ++i) {
            const double lw = (p.stencil_dot(i, j, base.w) - base.w[static_cast<std::size_t>(i)]) / p.dt;
            const double fij = lw + p.reward.at(i, j) - base.rho;
            f.at(i, j) = fij;
            f_max = std::max(f_max, fij);
        }
    const double f_tol = std::max(1e-6, 100.0 * base.residual / p.dt);
    if (f_max > f_tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "correction_solve: base solution violates optimality, max f = %.3e > %.3e",
                      f_max, f_tol);
        throw NumericalError(buf);
    }

    // Monte-Carlo generator defect of the mollified base value
    const MollifiedValue mv =
        MollifiedValue::from_solution(g, base.w, base.rho * p.dt, opt.mollifier_n);
    const C2Function w2 = C2Function::from_mollified(mv);
    const double scale = std::pow(jump.epsilon, -0.5 * opt.gamma0);
    RewardTable running;
    running.ns = ns;
    running.na = na;
    running.v.resize(static_cast<std::size_t>(ns) * na);
    for (int i = 0; i < ns; ++i) {
        const double x = g.point(i);
        for (int j = 0; j < na; ++j) {
            NoiseStream stream(derive_seed(opt.seed, 0xD317 + static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(j)));
            const DeltaR dr = delta_r_residual(w2, jump, model, x, cg.action(j), opt.num_mc, stream);
            running.at(i, j) = scale * (dr.value + f.at(i, j));
        }
    }

    DiffusiveProblem pc = compile_problem(g, model, cg, std::move(running));
    ErgodicSolution sol = rvi_solve(pc, opt.tol, opt.max_iter);

    CorrectionResult out;
    out.delta_rho = sol.rho;
    out.delta_w = sol.w;
    out.f_max = f_max;
    out.rho_corrected = base.rho + std::pow(jump.epsilon, 0.5 * opt.gamma0) * sol.rho;
    out.raw = std::move(sol);
    return out;
}

} // namespace ergodiff
