#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fd_kernel.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace ergodiff {

/// Discretized action set: Gamma+1 equally spaced points spanning A, both
/// endpoints included. Gamma = 0 degenerates to the single action A.lo.
struct ControlGrid {
    int gamma = 100;
    Interval set{0.0, 1.0};

    int count() const { return gamma + 1; }
    double action(int j) const {
        if (gamma == 0) return set.lo;
        return set.lo + set.width() * static_cast<double>(j) / gamma;
    }
    std::vector<double> points() const {
        std::vector<double> out(static_cast<std::size_t>(count()));
        for (int j = 0; j < count(); ++j) out[static_cast<std::size_t>(j)] = action(j);
        return out;
    }
};

inline ControlGrid make_control_grid(int gamma, Interval set = {0.0, 1.0}) {
    if (gamma < 0) throw ContractViolation("control grid: gamma must be nonnegative");
    return ControlGrid{gamma, set};
}

/// Solution of an ergodic fixed point: long-run average rho, relative value
/// vector w on the grid, greedy policy (indices into the control grid), and
/// convergence diagnostics.
struct ErgodicSolution {
    double rho = 0.0;
    std::vector<double> w;
    std::vector<int> policy;
    long iterations = 0;
    double residual = 0.0;
    double wall_time_ms = 0.0;
    bool cycle_warning = false;
};

/// Per-state-action reward values, action-major layout.
struct RewardTable {
    int ns = 0, na = 0;
    std::vector<double> v; // v[j*ns + i]

    double at(int i, int j) const { return v[static_cast<std::size_t>(j) * ns + i]; }
    double& at(int i, int j) { return v[static_cast<std::size_t>(j) * ns + i]; }
};

inline RewardTable make_reward_table(const Grid& g, const ControlGrid& cg,
                                     const std::function<double(double, double)>& reward) {
    RewardTable t;
    t.ns = g.size();
    t.na = cg.count();
    t.v.resize(static_cast<std::size_t>(t.ns) * t.na);
    for (int j = 0; j < t.na; ++j) {
        const double a = cg.action(j);
        for (int i = 0; i < t.ns; ++i) t.at(i, j) = reward(g.point(i), a);
    }
    return t;
}

/// Precompiled tables for one (grid, model, control grid) triple: per-action
/// stencils and rewards. Boundary rows carry the reflected stencil of their
/// inner neighbour (rows 2 and n-3) parameterized by the row's own action, so
/// the per-state maximization decouples.
struct DiffusiveProblem {
    Grid grid;
    ControlGrid actions;
    double dt = 0.0;
    std::vector<double> qm, q0, qp; // [j*ns + i]
    RewardTable reward;

    int ns() const { return grid.size(); }
    int na() const { return actions.count(); }

    double stencil_dot(int i, int j, std::span<const double> w) const {
        const std::size_t k = static_cast<std::size_t>(j) * ns() + i;
        const int n = ns();
        if (i == 0) return qm[k] * w[1] + q0[k] * w[2] + qp[k] * w[3];
        if (i == n - 1)
            return qm[k] * w[static_cast<std::size_t>(n - 4)] +
                   q0[k] * w[static_cast<std::size_t>(n - 3)] +
                   qp[k] * w[static_cast<std::size_t>(n - 2)];
        return qm[k] * w[static_cast<std::size_t>(i - 1)] + q0[k] * w[static_cast<std::size_t>(i)] +
               qp[k] * w[static_cast<std::size_t>(i + 1)];
    }
};

inline DiffusiveProblem compile_problem(const Grid& g, const DiffusionModel& m,
                                        const ControlGrid& cg, RewardTable reward) {
    const CflReport rep = check_cfl(g, m);
    if (!rep.kernel_ok())
        throw NumericalError("diffusive scheme refused: " +
                             (rep.message.empty() ? std::string("validity check failed")
                                                  : rep.message));
    DiffusiveProblem p;
    p.grid = g;
    p.actions = cg;
    p.dt = g.dt;
    p.reward = std::move(reward);
    const int ns = g.size(), na = cg.count();
    if (p.reward.ns != ns || p.reward.na != na)
        throw ContractViolation("compile_problem: reward table shape mismatch");
    p.qm.resize(static_cast<std::size_t>(ns) * na);
    p.q0.resize(static_cast<std::size_t>(ns) * na);
    p.qp.resize(static_cast<std::size_t>(ns) * na);
    for (int j = 0; j < na; ++j) {
        const double a = cg.action(j);
        for (int i = 0; i < ns; ++i) {
            const int src = (i == 0) ? 2 : (i == ns - 1 ? ns - 3 : i);
            const StencilRow row = transition_row(g, m, src, a);
            const std::size_t k = static_cast<std::size_t>(j) * ns + i;
            p.qm[k] = row.q_minus;
            p.q0[k] = row.q_stay;
            p.qp[k] = row.q_plus;
        }
    }
    return p;
}

inline DiffusiveProblem compile_problem(const Grid& g, const DiffusionModel& m,
                                        const ControlGrid& cg) {
    return compile_problem(g, m, cg, make_reward_table(g, cg, m.reward));
}

/// Relative value iteration for the reflected-chain ergodic fixed point
///
///   W = sup_a Q^a { W - e rho dt + R(a) dt },    w(ref) = rho dt.
///
/// One sweep applies T(w)(i) = max_j [ stencil_i(a_j) . w + r(i,j) dt ] and
/// renormalizes at the reference state; iteration stops when the span of
/// successive sweep differences drops below tol. Ties in the argmax resolve
/// to the smallest action index.
inline ErgodicSolution rvi_solve(const DiffusiveProblem& p, double tol = 1e-9,
                                 long max_iter = 1000000,
                                 std::vector<double>* span_history = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    const int ns = p.ns(), na = p.na();
    const int ref = p.grid.ref_index;
    const double dt = p.dt;

    std::vector<double> w(static_cast<std::size_t>(ns), 0.0);
    std::vector<double> tw(static_cast<std::size_t>(ns), 0.0);
    double rho = 0.0;
    double span = 0.0;
    long it = 0;
    bool converged = false;

    for (it = 1; it <= max_iter; ++it) {
        // T(w): per-state max over the action grid
        for (int i = 0; i < ns; ++i) tw[static_cast<std::size_t>(i)] = -1e300;
        for (int j = 0; j < na; ++j) {
            const std::size_t base = static_cast<std::size_t>(j) * ns;
            const double* rj = p.reward.v.data() + base;
            const double* qm = p.qm.data() + base;
            const double* q0 = p.q0.data() + base;
            const double* qp = p.qp.data() + base;
            {
                const double cand = qm[0] * w[1] + q0[0] * w[2] + qp[0] * w[3] + rj[0] * dt;
                if (cand > tw[0]) tw[0] = cand;
            }
            for (int i = 1; i < ns - 1; ++i) {
                const double cand = qm[i] * w[static_cast<std::size_t>(i - 1)] +
                                    q0[i] * w[static_cast<std::size_t>(i)] +
                                    qp[i] * w[static_cast<std::size_t>(i + 1)] + rj[i] * dt;
                if (cand > tw[static_cast<std::size_t>(i)]) tw[static_cast<std::size_t>(i)] = cand;
            }
            {
                const int i = ns - 1;
                const double cand = qm[i] * w[static_cast<std::size_t>(ns - 4)] +
                                    q0[i] * w[static_cast<std::size_t>(ns - 3)] +
                                    qp[i] * w[static_cast<std::size_t>(ns - 2)] + rj[i] * dt;
                if (cand > tw[static_cast<std::size_t>(i)]) tw[static_cast<std::size_t>(i)] = cand;
            }
        }
        double dmin = tw[0] - w[0], dmax = dmin;
        for (int i = 1; i < ns; ++i) {
            const double d = tw[static_cast<std::size_t>(i)] - w[static_cast<std::size_t>(i)];
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        span = dmax - dmin;
        if (span_history) span_history->push_back(span);
        rho = tw[static_cast<std::size_t>(ref)] / dt;
        const double shift = tw[static_cast<std::size_t>(ref)];
        for (int i = 0; i < ns; ++i)
            w[static_cast<std::size_t>(i)] = tw[static_cast<std::size_t>(i)] - shift;
        if (span <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "relative value iteration: max_iter=%ld reached, span residual %.3e > %.3e",
                      max_iter, span, tol);
        throw NumericalError(buf);
    }

    // final greedy sweep on the converged w fixes the policy deterministically
    ErgodicSolution sol;
    sol.policy.assign(static_cast<std::size_t>(ns), 0);
    std::vector<double> best(static_cast<std::size_t>(ns), -1e300);
    for (int j = 0; j < na; ++j) {
        for (int i = 0; i < ns; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * ns + i;
            const double cand = p.stencil_dot(i, j, w) + p.reward.v[k] * dt;
            if (cand > best[static_cast<std::size_t>(i)]) {
                best[static_cast<std::size_t>(i)] = cand;
                sol.policy[static_cast<std::size_t>(i)] = j;
            }
        }
    }

    sol.rho = rho;
    sol.w = std::move(w);
    for (double& v : sol.w) v += rho * dt; // normalization w(ref) = rho dt
    sol.iterations = it;
    sol.residual = span;
    sol.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

inline ErgodicSolution rvi_solve(const Grid& g, const DiffusionModel& m, const ControlGrid& cg,
                                 double tol = 1e-9, long max_iter = 1000000) {
    return rvi_solve(compile_problem(g, m, cg), tol, max_iter);
}

/// Sup-norm defect of the ergodic fixed point at (rho, w):
///   sup_i | max_j [stencil . w + r dt] - w(i) - rho dt |.
inline double fixed_point_defect(const DiffusiveProblem& p, const ErgodicSolution& sol) {
    const int ns = p.ns(), na = p.na();
    double defect = 0.0;
    for (int i = 0; i < ns; ++i) {
        double best = -1e300;
        for (int j = 0; j < na; ++j)
            best = std::max(best, p.stencil_dot(i, j, sol.w) +
                                      p.reward.at(i, j) * p.dt);
        defect = std::max(defect,
                          std::abs(best - sol.w[static_cast<std::size_t>(i)] - sol.rho * p.dt));
    }
    return defect;
}

} // namespace ergodiff
