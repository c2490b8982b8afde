#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "mollify.hpp"
#include "solvers.hpp"

namespace ergodiff {

/// Greedy action at x for a smoothed value profile: argmax over the control
/// grid of mu(x,a) Dw(x) + sigma^2/2 D^2w(x) + r(x,a). The curvature term is
/// action independent and only shifts the objective. Ties resolve to the
/// smallest action index. `rewards` holds r(x, a_j) for each control-grid
/// action (precompute it when sweeping a grid).
inline int extract_control_smooth_index(const MollifiedValue& mv, const DiffusionModel& model,
                                        const ControlGrid& cg, double x,
                                        std::span<const double> rewards) {
    if (static_cast<int>(rewards.size()) != cg.count())
        throw ContractViolation("extract_control_smooth: rewards size mismatch");
    const MollifiedValue::Derivs d = mv.derivs(x);
    const double curvature = 0.5 * model.sigma * model.sigma * d.d2;
    double best = -1e300;
    int best_j = 0;
    for (int j = 0; j < cg.count(); ++j) {
        const double v = model.drift(x, cg.action(j)) * d.d1 + curvature +
                         rewards[static_cast<std::size_t>(j)];
        if (v > best) {
            best = v;
            best_j = j;
        }
    }
    return best_j;
}

inline double extract_control_smooth(const MollifiedValue& mv, const DiffusionModel& model,
                                     const ControlGrid& cg, double x) {
    std::vector<double> rewards(static_cast<std::size_t>(cg.count()));
    for (int j = 0; j < cg.count(); ++j)
        rewards[static_cast<std::size_t>(j)] = model.reward(x, cg.action(j));
    return cg.action(extract_control_smooth_index(mv, model, cg, x, rewards));
}

/// Greedy actions at every grid point, reusing a precomputed reward table.
inline std::vector<double> extract_policy_on_grid(const MollifiedValue& mv,
                                                  const DiffusionModel& model,
                                                  const ControlGrid& cg, const Grid& g,
                                                  const RewardTable& rewards) {
    if (rewards.ns != g.size() || rewards.na != cg.count())
        throw ContractViolation("extract_policy_on_grid: reward table shape mismatch");
    std::vector<double> actions(static_cast<std::size_t>(g.size()));
    std::vector<double> row(static_cast<std::size_t>(cg.count()));
    for (int i = 0; i < g.size(); ++i) {
        for (int j = 0; j < cg.count(); ++j) row[static_cast<std::size_t>(j)] = rewards.at(i, j);
        actions[static_cast<std::size_t>(i)] =
            cg.action(extract_control_smooth_index(mv, model, cg, g.point(i), row));
    }
    return actions;
}

/// Measurable control map on R. Either a grid-projected action table (the
/// map is piecewise constant with breakpoints at grid midpoints, clamped at
/// the ends) or an on-demand smooth extraction.
class PolicyMap {
public:
    static PolicyMap projected(const Grid& g, std::vector<double> actions) {
        if (static_cast<int>(actions.size()) != g.size())
            throw ContractViolation("PolicyMap::projected: action vector length mismatch");
        PolicyMap p;
        p.grid_ = g;
        p.actions_ = std::move(actions);
        p.kind_ = Kind::Projected;
        return p;
    }

    static PolicyMap smooth(MollifiedValue mv, DiffusionModel model, ControlGrid cg) {
        PolicyMap p;
        p.smooth_ = std::make_shared<SmoothData>(
            SmoothData{std::move(mv), std::move(model), std::move(cg)});
        p.kind_ = Kind::Smooth;
        return p;
    }

    static PolicyMap constant(double action) {
        PolicyMap p;
        p.kind_ = Kind::Constant;
        p.const_action_ = action;
        return p;
    }

    double operator()(double x) const {
        switch (kind_) {
        case Kind::Constant: return const_action_;
        case Kind::Projected:
            return actions_[static_cast<std::size_t>(grid_.project(x))];
        case Kind::Smooth:
            return extract_control_smooth(smooth_->mv, smooth_->model, smooth_->cg, x);
        }
        throw ContractViolation("PolicyMap: empty map");
    }

    const std::vector<double>& grid_actions() const { return actions_; }
    const Grid& grid() const { return grid_; }

private:
    enum class Kind { Constant, Projected, Smooth };
    struct SmoothData {
        MollifiedValue mv;
        DiffusionModel model;
        ControlGrid cg;
    };

    Kind kind_ = Kind::Constant;
    double const_action_ = 0.0;
    Grid grid_{};
    std::vector<double> actions_;
    std::shared_ptr<const SmoothData> smooth_;
};

/// Projection of a per-grid-point action vector to a map on R.
inline PolicyMap project_policy(std::span<const double> grid_actions, const Grid& g) {
    return PolicyMap::projected(g, std::vector<double>(grid_actions.begin(), grid_actions.end()));
}

} // namespace ergodiff
