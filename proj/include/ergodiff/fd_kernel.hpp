#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace ergodiff {

/// Three-point transition probabilities of the locally consistent chain:
///   q_minus = (-mu h + sigma^2) / (2 L^2)
///   q_stay  = 1 - sigma^2 / L^2
///   q_plus  = ( mu h + sigma^2) / (2 L^2)
struct StencilRow {
    double q_minus = 0.0, q_stay = 0.0, q_plus = 0.0;
};

/// Validity report for the scheme on a given grid/model pair.
///
/// growth_condition:  L (1 + kappa h) h < sigma^2   (sufficient, global)
/// pointwise_nonneg:  max_{grid x actions} |mu| h <= sigma^2 (q± >= 0)
/// underline_p:       resulting lower bound on off-diagonal entries
///
/// Kernel construction refuses when pointwise_nonneg fails; the report itself
/// never throws.
struct CflReport {
    bool degenerate = false;
    bool growth_condition = false;
    bool pointwise_nonneg = false;
    double max_abs_drift = 0.0;
    double max_drift_h = 0.0;
    double sigma_sq = 0.0;
    double underline_p = 0.0;
    std::string message;

    bool kernel_ok() const { return !degenerate && pointwise_nonneg; }
};

inline CflReport check_cfl(const Grid& g, const DiffusionModel& m, int action_probe = 101) {
    CflReport rep;
    rep.sigma_sq = m.sigma * m.sigma;
    if (!(m.sigma > 0.0)) {
        rep.degenerate = true;
        rep.message = "degenerate ellipticity: sigma must be bounded away from zero";
        return rep;
    }
    const int n = g.size();
    const int na = std::max(2, action_probe);
    double max_abs_mu = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = g.point(i);
        for (int j = 0; j < na; ++j) {
            const double a =
                m.control_set.lo + m.control_set.width() * static_cast<double>(j) / (na - 1);
            max_abs_mu = std::max(max_abs_mu, std::abs(m.drift(x, a)));
        }
    }
    rep.max_abs_drift = max_abs_mu;
    rep.max_drift_h = max_abs_mu * g.h;
    rep.growth_condition = g.l_scheme * (1.0 + g.kappa * g.h) * g.h < rep.sigma_sq;
    rep.pointwise_nonneg = rep.max_drift_h <= rep.sigma_sq;
    rep.underline_p = (rep.sigma_sq - rep.max_drift_h) / (2.0 * g.l_scheme * g.l_scheme);
    if (!rep.pointwise_nonneg) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "pointwise q+/q- nonnegativity fails: max |mu| h = %.6g > sigma^2 = %.6g "
                      "(shrink h or the grid extent)",
                      rep.max_drift_h, rep.sigma_sq);
        rep.message = buf;
    }
    return rep;
}

/// Transition probabilities out of interior point z_i under action a.
/// Throws when a probability would be negative.
inline StencilRow transition_row(const Grid& g, const DiffusionModel& m, int i, double a) {
    if (!g.is_interior(i))
        throw ContractViolation("transition_row: index " + std::to_string(i) +
                                " is not an interior point");
    const double x = g.point(i);
    const double mu = m.drift(x, a);
    const double s2 = m.sigma * m.sigma;
    const double L2 = g.l_scheme * g.l_scheme;
    StencilRow row;
    row.q_minus = (-mu * g.h + s2) / (2.0 * L2);
    row.q_stay = 1.0 - s2 / L2;
    row.q_plus = (mu * g.h + s2) / (2.0 * L2);
    if (row.q_minus < 0.0 || row.q_plus < 0.0 || row.q_stay < 0.0) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "negative transition probability at (x=%.6g, a=%.6g): q-=%.3e q0=%.3e "
                      "q+=%.3e",
                      x, a, row.q_minus, row.q_stay, row.q_plus);
        throw NumericalError(buf);
    }
    return row;
}

/// Row-stochastic kernel for a fixed per-state action vector. Interior row i
/// occupies columns (i-1, i, i+1); the reflecting boundary rows copy the
/// realized stencils of rows 2 and n-3, shifted inward to columns (1,2,3) and
/// (n-4,n-3,n-2).
struct TransitionKernel {
    Grid grid;
    std::vector<double> actions;
    std::vector<StencilRow> stencil; // per row

    int size() const { return grid.size(); }

    std::array<std::pair<int, double>, 3> entries(int i) const {
        const int n = size();
        const StencilRow& s = stencil[static_cast<std::size_t>(i)];
        if (i == 0) return {{{1, s.q_minus}, {2, s.q_stay}, {3, s.q_plus}}};
        if (i == n - 1) return {{{n - 4, s.q_minus}, {n - 3, s.q_stay}, {n - 2, s.q_plus}}};
        return {{{i - 1, s.q_minus}, {i, s.q_stay}, {i + 1, s.q_plus}}};
    }

    double row_dot(int i, std::span<const double> w) const {
        double acc = 0.0;
        for (const auto& [col, p] : entries(i)) acc += p * w[static_cast<std::size_t>(col)];
        return acc;
    }

    std::vector<std::vector<double>> dense() const {
        const int n = size();
        std::vector<std::vector<double>> out(static_cast<std::size_t>(n),
                                             std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int i = 0; i < n; ++i)
            for (const auto& [col, p] : entries(i))
                out[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] += p;
        return out;
    }
};

inline TransitionKernel build_kernel(const Grid& g, const DiffusionModel& m,
                                     std::span<const double> actions) {
    const int n = g.size();
    if (static_cast<int>(actions.size()) != n)
        throw ContractViolation("build_kernel: action vector length must equal grid size");
    const CflReport rep = check_cfl(g, m);
    if (!rep.kernel_ok()) throw NumericalError("build_kernel refused: " + rep.message);
    TransitionKernel k;
    k.grid = g;
    k.actions.assign(actions.begin(), actions.end());
    k.stencil.resize(static_cast<std::size_t>(n));
    for (int i = 1; i < n - 1; ++i)
        k.stencil[static_cast<std::size_t>(i)] = transition_row(g, m, i, actions[i]);
    k.stencil[0] = k.stencil[2];                                           // reflect left
    k.stencil[static_cast<std::size_t>(n - 1)] = k.stencil[static_cast<std::size_t>(n - 3)]; // reflect right
    return k;
}

/// Central finite-difference generator at interior z_i:
///   mu(x,a) (w_{i+1}-w_{i-1})/(2h) + sigma^2/2 (w_{i+1}+w_{i-1}-2w_i)/h^2.
inline double fd_apply(const Grid& g, const DiffusionModel& m, std::span<const double> w, int i,
                       double a) {
    if (!g.is_interior(i))
        throw ContractViolation("fd_apply: index " + std::to_string(i) + " is a boundary point");
    const double x = g.point(i);
    const double mu = m.drift(x, a);
    const double wm = w[static_cast<std::size_t>(i - 1)];
    const double w0 = w[static_cast<std::size_t>(i)];
    const double wp = w[static_cast<std::size_t>(i + 1)];
    return mu * (wp - wm) / (2.0 * g.h) + 0.5 * m.sigma * m.sigma * (wp + wm - 2.0 * w0) / (g.h * g.h);
}

} // namespace ergodiff
