#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "empirical.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "mollify.hpp"
#include "policy.hpp"
#include "ratefit.hpp"
#include "simulate.hpp"
#include "solvers.hpp"

namespace ergodiff {

/// One epsilon point of a sweep. The jump-schedule fields obey
/// h = eps^{3/2}, kappa = N = ceil(jump_factor * eps^{-3/2}); h_diffusive is
/// the mesh of the diffusive solve the record leans on (solved once per h and
/// shared across epsilons, wall time replicated).
struct RunRecord {
    std::string experiment_id;
    double epsilon = 0.0;
    double h = 0.0; // jump mesh when the jump stage ran, else diffusive mesh
    int kappa = 0;
    long N = 0;
    int gamma = 0;
    double h_diffusive = 0.0;
    double rho_diffusive = 0.0;
    std::optional<double> rho_jump;
    std::optional<double> rho_policy_estimate;
    std::optional<double> rho_policy_se;
    double wall_time_diffusive_ms = 0.0;
    double wall_time_jump_ms = 0.0;
    std::uint64_t seed = 0;

    /// Every recorded value must be finite.
    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(epsilon) || !finite(h) || !finite(h_diffusive) || !finite(rho_diffusive) ||
            !finite(wall_time_diffusive_ms) || !finite(wall_time_jump_ms) ||
            (rho_jump && !finite(*rho_jump)) ||
            (rho_policy_estimate && !finite(*rho_policy_estimate)) ||
            (rho_policy_se && !finite(*rho_policy_se)))
            throw NumericalError("run record '" + experiment_id + "' carries non-finite values");
    }
};

inline DiffusionModel plan_diffusion_model(const ExperimentPlan& plan) {
    DiffusionModel m = make_auction_diffusion(plan.law, plan.quad_rel_tol);
    m.control_set = plan.control_set;
    return m;
}

inline JumpModel plan_jump_model(const ExperimentPlan& plan, double epsilon) {
    JumpModel m = make_auction_jump(epsilon, plan.law, plan.quad_rel_tol);
    m.control_set = plan.control_set;
    return m;
}

inline Grid plan_diffusive_grid(const ExperimentPlan& plan, double sigma) {
    const double L = plan.l_scheme.value_or(std::sqrt(2.0) * sigma);
    const int kappa = plan.schedule == "quarter" ? kappa_quarter_rule(plan.h)
                                                 : kappa_for_extent(plan.extent, plan.h);
    return make_grid(kappa, plan.h, std::nullopt, L);
}

/// Jump grid per the sweep schedule: mesh eps^{3/2} and kappa = N =
/// ceil(jump_factor eps^{-3/2}) on [offset, offset + 2 kappa h].
inline Grid plan_jump_grid(const ExperimentPlan& plan, double epsilon, double sigma) {
    const double h = std::pow(epsilon, 1.5);
    const int kappa =
        std::max(3, static_cast<int>(std::ceil(plan.jump_factor * std::pow(epsilon, -1.5))));
    const double L = plan.l_scheme.value_or(std::sqrt(2.0) * sigma);
    return make_grid(kappa, h, plan.jump_offset, L);
}

inline long plan_jump_samples(const ExperimentPlan& plan, double epsilon) {
    return std::max<long>(1, static_cast<long>(std::ceil(plan.jump_factor * std::pow(epsilon, -1.5))));
}

/// Cached diffusive stage: solved once per mesh and reused by every epsilon
/// that shares it.
struct DiffusiveStage {
    Grid grid;
    ErgodicSolution solution;
    std::vector<double> policy_actions; // smoothed greedy actions on the grid
    double wall_time_ms = 0.0;
};

inline DiffusiveStage solve_diffusive_stage(const ExperimentPlan& plan) {
    const DiffusionModel model = plan_diffusion_model(plan);
    const Grid grid = plan_diffusive_grid(plan, model.sigma);
    const ControlGrid cg = make_control_grid(plan.gamma, plan.control_set);
    const auto t0 = std::chrono::steady_clock::now();
    DiffusiveProblem problem = compile_problem(grid, model, cg);
    ErgodicSolution sol = rvi_solve(problem, plan.rvi_tol, plan.rvi_max_iter);
    DiffusiveStage stage;
    stage.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const MollifiedValue mv =
        MollifiedValue::from_solution(grid, sol.w, sol.rho * grid.dt, plan.mollifier_n);
    stage.policy_actions = extract_policy_on_grid(mv, model, cg, grid, problem.reward);
    stage.grid = grid;
    stage.solution = std::move(sol);
    return stage;
}

struct JumpStage {
    Grid grid;
    ErgodicSolution solution;
    long num_samples = 0;
    double wall_time_ms = 0.0;
    double estimate_ms = 0.0; // kernel estimation
    double rewards_ms = 0.0;  // reward table quadrature
    double iterate_ms = 0.0;  // policy iteration proper
};

/// Jump-side solve at one epsilon: estimate the empirical kernels, tabulate
/// rewards, run policy iteration. The wall time covers those three steps;
/// the per-step breakdown is reported alongside.
inline JumpStage solve_jump_stage(const ExperimentPlan& plan, double epsilon,
                                  std::uint64_t kernel_seed) {
    const JumpModel jump = plan_jump_model(plan, epsilon);
    const DiffusionModel diff = plan_diffusion_model(plan); // sigma sets the grid time scale
    const Grid grid = plan_jump_grid(plan, epsilon, diff.sigma);
    const ControlGrid cg = make_control_grid(plan.gamma, plan.control_set);
    const long N = plan_jump_samples(plan, epsilon);

    using Clock = std::chrono::steady_clock;
    const auto ms_since = [](Clock::time_point t) {
        return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
    };
    JumpStage stage;
    const auto t0 = Clock::now();
    const EmpiricalKernelSet kernels = estimate_empirical_kernels(
        grid, jump, cg, static_cast<int>(N), kernel_seed, !plan.independent_sampling);
    stage.estimate_ms = ms_since(t0);
    const auto t1 = Clock::now();
    const RewardTable rewards = make_reward_table(grid, cg, jump.reward);
    stage.rewards_ms = ms_since(t1);
    const auto t2 = Clock::now();
    ErgodicSolution sol = policy_iterate(kernels, rewards, epsilon, plan.pi_tol, plan.pi_max_iter);
    stage.iterate_ms = ms_since(t2);
    stage.wall_time_ms = ms_since(t0);
    stage.grid = grid;
    stage.solution = std::move(sol);
    stage.num_samples = N;
    return stage;
}

/// Full sweep: for each epsilon run the jump stage (timed), reuse the shared
/// diffusive solve (timed once), evaluate the extracted diffusive policy on
/// the jump dynamics by simulation, and collect one record per epsilon.
/// Stage seeds derive deterministically from (plan.seed, epsilon index).
/// A failing stage logs and skips the record unless fail_fast is set.
inline std::vector<RunRecord> run_sweep(const ExperimentPlan& plan,
                                        const std::function<void(const std::string&)>& log = {}) {
    auto say = [&](const std::string& s) {
        if (log) log(s);
    };
    std::vector<RunRecord> records;
    DiffusiveStage diffusive;
    try {
        diffusive = solve_diffusive_stage(plan);
    } catch (const std::exception& ex) {
        say(std::string("diffusive stage failed, no records possible: ") + ex.what());
        if (plan.fail_fast) throw;
        return records;
    }
    say("diffusive solve: rho = " + fmt_double(diffusive.solution.rho) + " (" +
        fmt_ms(diffusive.wall_time_ms) + " ms, " + std::to_string(diffusive.solution.iterations) +
        " sweeps)");
    const PolicyMap policy = project_policy(diffusive.policy_actions, diffusive.grid);

    for (std::size_t idx = 0; idx < plan.epsilons.size(); ++idx) {
        const double eps = plan.epsilons[idx];
        RunRecord rec;
        rec.experiment_id = "sweep-eps" + fmt_double(eps);
        rec.epsilon = eps;
        rec.gamma = plan.gamma;
        rec.seed = plan.seed;
        rec.h_diffusive = plan.h;
        rec.rho_diffusive = diffusive.solution.rho;
        rec.wall_time_diffusive_ms = diffusive.wall_time_ms;
        try {
            if (plan.jump_stage) {
                const JumpStage jstage =
                    solve_jump_stage(plan, eps, derive_seed(plan.seed, 0x4B00, idx));
                rec.h = jstage.grid.h;
                rec.kappa = jstage.grid.kappa;
                rec.N = jstage.num_samples;
                rec.rho_jump = jstage.solution.rho;
                rec.wall_time_jump_ms = jstage.wall_time_ms;
                say("eps=" + fmt_double(eps) + ": rho_jump = " + fmt_double(jstage.solution.rho) +
                    " (" + fmt_ms(jstage.wall_time_ms) + " ms, " +
                    std::to_string(jstage.solution.iterations) + " policy sweeps)");
            } else {
                rec.h = plan.h;
                rec.kappa = diffusive.grid.kappa;
                rec.N = 0;
            }

            if (plan.sim_paths > 0) {
                const JumpModel jump = plan_jump_model(plan, eps);
                SimConfig cfg;
                cfg.T = plan.sim_T;
                cfg.num_paths = plan.sim_paths;
                cfg.seed = derive_seed(plan.seed, 0x5100, idx);
                cfg.burn_in_fraction = plan.burn_in;
                const EstimateWithCI est = estimate_rho(jump, policy, cfg, plan.threads);
                rec.rho_policy_estimate = est.mean;
                rec.rho_policy_se = est.std_error;
                say("eps=" + fmt_double(eps) + ": policy estimate = " + fmt_double(est.mean) +
                    " +- " + fmt_double(est.std_error));
            }
            rec.validate();
            records.push_back(rec);
        } catch (const std::exception& ex) {
            say("eps=" + fmt_double(eps) + ": stage failed: " + ex.what());
            if (plan.fail_fast) throw;
        }
    }
    return records;
}

inline std::string records_to_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << "experiment_id,epsilon,h,kappa,N,gamma,h_diffusive,rho_diffusive,rho_jump,"
           "rho_policy_estimate,rho_policy_se,wall_time_diffusive_ms,wall_time_jump_ms,seed\n";
    for (const auto& r : records) {
        const auto opt = [](const std::optional<double>& v) {
            return v ? fmt_double(*v) : std::string();
        };
        out << r.experiment_id << ',' << fmt_double(r.epsilon) << ',' << fmt_double(r.h) << ','
            << r.kappa << ',' << r.N << ',' << r.gamma << ',' << fmt_double(r.h_diffusive) << ','
            << fmt_double(r.rho_diffusive) << ',' << opt(r.rho_jump) << ','
            << opt(r.rho_policy_estimate) << ',' << opt(r.rho_policy_se) << ','
            << fmt_ms(r.wall_time_diffusive_ms) << ',' << fmt_ms(r.wall_time_jump_ms) << ','
            << r.seed << '\n';
    }
    return out.str();
}

enum class PlotKind { Cost, ValueGap, PolicyGap };

struct PlotData {
    std::string csv;
    std::string svg;
    std::vector<std::pair<double, double>> primary; // (epsilon, y) of the fitted series
    std::optional<RateFit> fit;
};

namespace detail {

inline std::string render_svg(const std::vector<std::vector<std::pair<double, double>>>& series,
                              const std::vector<std::string>& names,
                              const std::optional<RateFit>& fit, const std::string& title) {
    const double W = 480.0, H = 360.0, ml = 60.0, mr = 20.0, mt = 30.0, mb = 45.0;
    double lx0 = 1e300, lx1 = -1e300, ly0 = 1e300, ly1 = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s) {
            lx0 = std::min(lx0, std::log10(x));
            lx1 = std::max(lx1, std::log10(x));
            ly0 = std::min(ly0, std::log10(y));
            ly1 = std::max(ly1, std::log10(y));
        }
    if (lx1 - lx0 < 1e-12) {
        lx0 -= 0.5;
        lx1 += 0.5;
    }
    if (ly1 - ly0 < 1e-12) {
        ly0 -= 0.5;
        ly1 += 0.5;
    }
    const double padx = 0.06 * (lx1 - lx0), pady = 0.08 * (ly1 - ly0);
    lx0 -= padx;
    lx1 += padx;
    ly0 -= pady;
    ly1 += pady;
    auto X = [&](double x) {
        return ml + (std::log10(x) - lx0) / (lx1 - lx0) * (W - ml - mr);
    };
    auto Y = [&](double y) {
        return H - mb - (std::log10(y) - ly0) / (ly1 - ly0) * (H - mt - mb);
    };
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    auto px = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" "
         "viewBox=\"0 0 480 360\">\n";
    s << "<rect x=\"0\" y=\"0\" width=\"480\" height=\"360\" fill=\"white\"/>\n";
    s << "<rect x=\"" << px(ml) << "\" y=\"" << px(mt) << "\" width=\"" << px(W - ml - mr)
      << "\" height=\"" << px(H - mt - mb)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    s << "<text x=\"" << px(W / 2) << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" "
         "text-anchor=\"middle\">"
      << title << "</text>\n";
    s << "<text x=\"" << px(W / 2) << "\" y=\"" << px(H - 10)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">epsilon "
         "(log)</text>\n";
    // corner tick labels
    s << "<text x=\"" << px(ml) << "\" y=\"" << px(H - mb + 14)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
      << num(std::pow(10.0, lx0 + padx)) << "</text>\n";
    s << "<text x=\"" << px(W - mr) << "\" y=\"" << px(H - mb + 14)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
      << num(std::pow(10.0, lx1 - padx)) << "</text>\n";
    s << "<text x=\"" << px(ml - 6) << "\" y=\"" << px(H - mb)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
      << num(std::pow(10.0, ly0 + pady)) << "</text>\n";
    s << "<text x=\"" << px(ml - 6) << "\" y=\"" << px(mt + 8)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">"
      << num(std::pow(10.0, ly1 - pady)) << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = colors[si % 4];
        for (const auto& [x, y] : series[si])
            s << "<circle cx=\"" << px(X(x)) << "\" cy=\"" << px(Y(y))
              << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        s << "<text x=\"" << px(W - mr - 4) << "\" y=\"" << px(mt + 16 + 14 * si)
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" fill=\"" << color
          << "\">" << names[si] << "</text>\n";
    }
    if (fit && !series.empty() && series[0].size() >= 2) {
        double xa = 1e300, xb = -1e300;
        for (const auto& [x, y] : series[0]) {
            xa = std::min(xa, x);
            xb = std::max(xb, x);
        }
        const double ya = std::exp(fit->intercept + fit->slope * std::log(xa));
        const double yb = std::exp(fit->intercept + fit->slope * std::log(xb));
        s << "<line x1=\"" << px(X(xa)) << "\" y1=\"" << px(Y(ya)) << "\" x2=\"" << px(X(xb))
          << "\" y2=\"" << px(Y(yb))
          << "\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
        s << "<text x=\"" << px(ml + 8) << "\" y=\"" << px(mt + 16)
          << "\" font-family=\"sans-serif\" font-size=\"11\">slope " << num(fit->slope)
          << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

} // namespace detail

/// Plot-ready projection of the sweep records:
///   Cost      (epsilon, jump ms) and (epsilon, diffusive ms), fit on the jump series
///   ValueGap  |rho_jump - rho_diffusive(finest diffusive mesh)|
///   PolicyGap |policy estimate - rho_jump|
/// Output is a CSV plus a self-contained SVG scatter; both byte-stable for
/// identical inputs.
inline PlotData emit_plot_data(const std::vector<RunRecord>& records, PlotKind kind) {
    if (records.empty()) throw ContractViolation("emit_plot_data: no records");
    PlotData out;
    std::ostringstream csv;
    std::vector<std::vector<std::pair<double, double>>> series;
    std::vector<std::string> names;

    if (kind == PlotKind::Cost) {
        csv << "epsilon,jump_ms,diffusive_ms\n";
        series.resize(2);
        names = {"jump solver", "diffusive solver"};
        for (const auto& r : records) {
            if (!r.rho_jump) continue;
            csv << fmt_double(r.epsilon) << ',' << fmt_ms(r.wall_time_jump_ms) << ','
                << fmt_ms(r.wall_time_diffusive_ms) << '\n';
            series[0].emplace_back(r.epsilon, std::max(r.wall_time_jump_ms, 1e-3));
            series[1].emplace_back(r.epsilon, std::max(r.wall_time_diffusive_ms, 1e-3));
        }
    } else if (kind == PlotKind::ValueGap) {
        const RunRecord* ref = nullptr;
        for (const auto& r : records)
            if (!ref || r.h_diffusive < ref->h_diffusive) ref = &r;
        csv << "epsilon,value_gap\n";
        series.resize(1);
        names = {"|rho_jump - rho_diffusive|"};
        for (const auto& r : records) {
            if (!r.rho_jump) continue;
            const double gap = std::abs(*r.rho_jump - ref->rho_diffusive);
            csv << fmt_double(r.epsilon) << ',' << fmt_double(gap) << '\n';
            if (gap > 0.0) series[0].emplace_back(r.epsilon, gap);
        }
    } else {
        csv << "epsilon,policy_gap,policy_se\n";
        series.resize(1);
        names = {"|policy estimate - rho_jump|"};
        for (const auto& r : records) {
            if (!r.rho_jump || !r.rho_policy_estimate) continue;
            const double gap = std::abs(*r.rho_policy_estimate - *r.rho_jump);
            csv << fmt_double(r.epsilon) << ',' << fmt_double(gap) << ','
                << fmt_double(r.rho_policy_se.value_or(0.0)) << '\n';
            if (gap > 0.0) series[0].emplace_back(r.epsilon, gap);
        }
    }
    if (series.empty() || series[0].empty())
        throw ContractViolation("emit_plot_data: records carry no data for this plot");
    out.primary = series[0];
    if (series[0].size() >= 3) out.fit = fit_rate(series[0]);
    static const char* titles[] = {"solver cost vs epsilon", "value gap vs epsilon",
                                   "policy suboptimality vs epsilon"};
    out.svg = detail::render_svg(series, names, out.fit, titles[static_cast<int>(kind)]);
    out.csv = csv.str();
    return out;
}

/// Serialized grid solution: one row per state plus a scalar side record.
inline std::string solution_to_csv(const Grid& g, const ErgodicSolution& sol,
                                   const ControlGrid& cg) {
    std::ostringstream out;
    out << "index,z,w,policy_action\n";
    for (int i = 0; i < g.size(); ++i)
        out << i << ',' << fmt_double(g.point(i)) << ','
            << fmt_double(sol.w[static_cast<std::size_t>(i)]) << ','
            << fmt_double(cg.action(sol.policy[static_cast<std::size_t>(i)])) << '\n';
    return out.str();
}

inline std::string solution_scalars_csv(const ErgodicSolution& sol) {
    std::ostringstream out;
    out << "rho,iterations,residual,wall_time_ms\n";
    out << fmt_double(sol.rho) << ',' << sol.iterations << ',' << fmt_double(sol.residual) << ','
        << fmt_ms(sol.wall_time_ms) << '\n';
    return out.str();
}

inline std::string policy_to_csv(const Grid& g, std::span<const double> actions, int mollifier_n,
                                 int gamma, const std::string& interpolation) {
    std::ostringstream out;
    out << "# mollifier_n=" << mollifier_n << " gamma=" << gamma
        << " interpolation=" << interpolation << '\n';
    out << "z,action\n";
    for (int i = 0; i < g.size(); ++i)
        out << fmt_double(g.point(i)) << ',' << fmt_double(actions[static_cast<std::size_t>(i)])
            << '\n';
    return out.str();
}

inline std::string paths_to_csv(const std::vector<PathResult>& paths) {
    std::ostringstream out;
    out << "path_id,reward_average,jump_count,final_state\n";
    for (std::size_t i = 0; i < paths.size(); ++i)
        out << i << ',' << fmt_double(paths[i].reward_average) << ',' << paths[i].jump_count << ','
            << fmt_double(paths[i].final_state) << '\n';
    return out.str();
}

} // namespace ergodiff
