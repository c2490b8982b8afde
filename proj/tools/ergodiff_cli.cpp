// ergodiff command-line interface
//
// Subcommands:
//   solve-diffusive    solve the limit ergodic problem on a grid
//   solve-jump         empirical-kernel policy iteration at each epsilon
//   extract-policy     smoothed greedy policy from the diffusive solve
//   evaluate-policy    Monte-Carlo ergodic average of a policy file
//   check-assumptions  contraction / Lyapunov drift probes
//   sweep              full epsilon sweep with records and plot data
//   fit                power-law fit of a (x, y) CSV
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergodiff/ergodiff.hpp"

namespace fs = std::filesystem;
using namespace ergodiff;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<long> seed;
    std::optional<std::string> out_dir;
    std::vector<double> epsilons;
    std::optional<int> threads;
    bool fail_fast = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config file");
    cmd->add_option("--seed", flags.seed, "master seed override");
    cmd->add_option("--out", flags.out_dir, "output directory override");
    cmd->add_option("--epsilon", flags.epsilons, "epsilon list override")->delimiter(',');
    cmd->add_option("--threads", flags.threads, "worker threads");
    cmd->add_flag("--fail-fast", flags.fail_fast, "abort the sweep on the first stage error");
}

ExperimentPlan resolve_plan(const CommonFlags& flags) {
    ExperimentPlan plan =
        flags.config_path.empty() ? ExperimentPlan{} : parse_config(flags.config_path);
    if (flags.seed) plan.seed = static_cast<std::uint64_t>(*flags.seed);
    if (flags.out_dir) plan.out_dir = *flags.out_dir;
    if (!flags.epsilons.empty()) {
        for (double e : flags.epsilons)
            if (!(e > 0.0 && e < 1.0)) throw ConfigError("--epsilon values must lie in (0,1)");
        plan.epsilons = flags.epsilons;
    }
    if (flags.threads) {
        if (*flags.threads < 1) throw ConfigError("--threads must be >= 1");
        plan.threads = *flags.threads;
    }
    if (flags.fail_fast) plan.fail_fast = true;
    return plan;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

int run_solve_diffusive(const CommonFlags& flags) {
    const ExperimentPlan plan = resolve_plan(flags);
    ensure_dir(plan.out_dir);
    const DiffusiveStage stage = solve_diffusive_stage(plan);
    const ControlGrid cg = make_control_grid(plan.gamma, plan.control_set);
    write_text_file(plan.out_dir + "/diffusive_solution.csv",
                    solution_to_csv(stage.grid, stage.solution, cg));
    ErgodicSolution timed = stage.solution;
    timed.wall_time_ms = stage.wall_time_ms;
    write_text_file(plan.out_dir + "/diffusive_scalars.csv", solution_scalars_csv(timed));
    std::printf("rho = %.12g  (%ld sweeps, residual %.3e, %.1f ms)\n", stage.solution.rho,
                stage.solution.iterations, stage.solution.residual, stage.wall_time_ms);
    std::printf("wrote %s/diffusive_solution.csv\n", plan.out_dir.c_str());
    return 0;
}

int run_solve_jump(const CommonFlags& flags) {
    const ExperimentPlan plan = resolve_plan(flags);
    ensure_dir(plan.out_dir);
    const ControlGrid cg = make_control_grid(plan.gamma, plan.control_set);
    for (std::size_t idx = 0; idx < plan.epsilons.size(); ++idx) {
        const double eps = plan.epsilons[idx];
        const JumpStage stage = solve_jump_stage(plan, eps, derive_seed(plan.seed, 0x4B00, idx));
        const std::string tag = "jump_eps" + fmt_double(eps);
        write_text_file(plan.out_dir + "/" + tag + "_solution.csv",
                        solution_to_csv(stage.grid, stage.solution, cg));
        ErgodicSolution timed = stage.solution;
        timed.wall_time_ms = stage.wall_time_ms;
        write_text_file(plan.out_dir + "/" + tag + "_scalars.csv", solution_scalars_csv(timed));
        std::printf("eps = %-8g rho = %.12g  (%ld policy sweeps, %.1f ms)%s\n", eps,
                    stage.solution.rho, stage.solution.iterations, stage.wall_time_ms,
                    stage.solution.cycle_warning ? "  [cycle detected: best iterate returned]" : "");
    }
    return 0;
}

int run_extract_policy(const CommonFlags& flags) {
    const ExperimentPlan plan = resolve_plan(flags);
    ensure_dir(plan.out_dir);
    const DiffusiveStage stage = solve_diffusive_stage(plan);
    write_text_file(plan.out_dir + "/policy.csv",
                    policy_to_csv(stage.grid, stage.policy_actions, plan.mollifier_n, plan.gamma,
                                  "piecewise-linear"));
    std::printf("rho = %.12g, policy written to %s/policy.csv\n", stage.solution.rho,
                plan.out_dir.c_str());
    return 0;
}

PolicyMap load_policy_csv(const std::string& path) {
    const CsvTable t = parse_csv(read_text_file(path));
    const int zc = t.column("z"), ac = t.column("action");
    std::vector<double> z, a;
    for (const auto& row : t.rows) {
        z.push_back(std::stod(row[static_cast<std::size_t>(zc)]));
        a.push_back(std::stod(row[static_cast<std::size_t>(ac)]));
    }
    if (z.size() < 7) throw ConfigError("policy file too short: " + path);
    const double h = z[1] - z[0];
    for (std::size_t i = 1; i + 1 < z.size(); ++i)
        if (std::abs((z[i + 1] - z[i]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw ConfigError("policy file grid is not uniform: " + path);
    const int kappa = static_cast<int>((z.size() - 1) / 2);
    if (static_cast<std::size_t>(2 * kappa + 1) != z.size())
        throw ConfigError("policy file must hold an odd number of grid points");
    const Grid g = make_grid(kappa, h, z[0], 1.0);
    return project_policy(a, g);
}

int run_evaluate_policy(const CommonFlags& flags, const std::string& policy_path) {
    const ExperimentPlan plan = resolve_plan(flags);
    ensure_dir(plan.out_dir);
    const PolicyMap policy = load_policy_csv(policy_path);
    for (std::size_t idx = 0; idx < plan.epsilons.size(); ++idx) {
        const double eps = plan.epsilons[idx];
        const JumpModel jump = plan_jump_model(plan, eps);
        SimConfig cfg;
        cfg.T = plan.sim_T;
        cfg.num_paths = plan.sim_paths;
        cfg.seed = derive_seed(plan.seed, 0x5100, idx);
        cfg.burn_in_fraction = plan.burn_in;
        cfg.keep_paths = true;
        const EstimateWithCI est = estimate_rho(jump, policy, cfg, plan.threads);
        write_text_file(plan.out_dir + "/paths_eps" + fmt_double(eps) + ".csv",
                        paths_to_csv(est.per_path));
        std::printf("eps = %-8g policy value = %.8g +- %.3g  (%d paths)\n", eps, est.mean,
                    est.std_error, est.num_paths);
    }
    return 0;
}

int run_check_assumptions(const CommonFlags& flags, int p, int num_mc) {
    const ExperimentPlan plan = resolve_plan(flags);
    const double eps = plan.epsilons.front();
    const JumpModel jump = plan_jump_model(plan, eps);
    const std::vector<std::pair<double, double>> pairs{
        {0.0, 1.0}, {-1.0, 2.0}, {0.5, 0.6}, {-2.0, -1.0}, {1.0, 1.0}};
    NoiseStream stream(derive_seed(plan.seed, 0xA55E));
    const AssumptionReport rep = check_assumptions(jump, p, num_mc, pairs, stream);
    std::printf("contraction/Lyapunov probes at eps = %g, p = %d, %d samples\n", eps, p, num_mc);
    std::printf("%10s %10s %8s %14s %14s %14s\n", "x", "x'", "a", "D_zeta/zeta", "D_xi", "xi");
    for (const auto& probe : rep.probes)
        std::printf("%10.4g %10.4g %8.4g %14.6g %14.6g %14.6g\n", probe.x, probe.x_prime,
                    probe.action, probe.contraction_ratio, probe.d_xi, probe.xi);
    std::printf("worst contraction ratio: %.6g\n", rep.worst_contraction_ratio);
    std::printf("Lyapunov fit: D_xi ~ -%.6g * xi + %.6g\n", rep.lyapunov_c1, rep.lyapunov_c2);
    return 0;
}

int run_sweep_cmd(const CommonFlags& flags) {
    const ExperimentPlan plan = resolve_plan(flags);
    ensure_dir(plan.out_dir);
    const auto records =
        run_sweep(plan, [](const std::string& s) { std::printf("%s\n", s.c_str()); });
    if (records.empty()) {
        std::fprintf(stderr, "sweep produced no records\n");
        return 2;
    }
    write_text_file(plan.out_dir + "/records.csv", records_to_csv(records));
    const struct {
        PlotKind kind;
        const char* name;
    } plots[] = {{PlotKind::Cost, "cost"},
                 {PlotKind::ValueGap, "value_gap"},
                 {PlotKind::PolicyGap, "policy_gap"}};
    for (const auto& pl : plots) {
        try {
            const PlotData data = emit_plot_data(records, pl.kind);
            write_text_file(plan.out_dir + "/" + pl.name + ".csv", data.csv);
            write_text_file(plan.out_dir + "/" + pl.name + ".svg", data.svg);
            if (data.fit)
                std::printf("%s: fitted slope %.4f (r^2 = %.4f)\n", pl.name, data.fit->slope,
                            data.fit->r_squared);
        } catch (const std::exception& ex) {
            std::printf("%s: skipped (%s)\n", pl.name, ex.what());
        }
    }
    std::printf("wrote %s/records.csv\n", plan.out_dir.c_str());
    return 0;
}

int run_fit(const std::string& input, const std::string& xcol, const std::string& ycol) {
    const CsvTable t = parse_csv(read_text_file(input));
    const int xi = t.column(xcol), yi = t.column(ycol);
    std::vector<std::pair<double, double>> pairs;
    for (const auto& row : t.rows) {
        const std::string& ys = row[static_cast<std::size_t>(yi)];
        if (ys.empty()) continue;
        pairs.emplace_back(std::stod(row[static_cast<std::size_t>(xi)]), std::stod(ys));
    }
    const RateFit fit = fit_rate(pairs);
    std::printf("slope = %.10g\nintercept = %.10g\nr_squared = %.10g\npoints = %d\n", fit.slope,
                fit.intercept, fit.r_squared, fit.points_used);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergodic control of high-frequency jump dynamics via the diffusive limit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string policy_path, fit_input, fit_x = "epsilon", fit_y = "value_gap";
    int assume_p = 1, assume_mc = 200000;

    auto* solve_d = app.add_subcommand("solve-diffusive", "solve the limit ergodic problem");
    add_common(solve_d, flags);
    auto* solve_j = app.add_subcommand("solve-jump", "policy iteration on empirical kernels");
    add_common(solve_j, flags);
    auto* extract = app.add_subcommand("extract-policy", "smoothed greedy policy to CSV");
    add_common(extract, flags);
    auto* evaluate = app.add_subcommand("evaluate-policy", "simulate a policy on the jump model");
    add_common(evaluate, flags);
    evaluate->add_option("--policy", policy_path, "policy CSV (z, action)")->required();
    auto* assume = app.add_subcommand("check-assumptions", "contraction and Lyapunov probes");
    add_common(assume, flags);
    assume->add_option("--p", assume_p, "moment exponent p (zeta = |x-x'|^(2p))");
    assume->add_option("--samples", assume_mc, "Monte-Carlo samples per probe");
    auto* sweep = app.add_subcommand("sweep", "full epsilon sweep");
    add_common(sweep, flags);
    auto* fit = app.add_subcommand("fit", "log-log power-law fit of a CSV");
    fit->add_option("--input", fit_input, "input CSV")->required();
    fit->add_option("--xcol", fit_x, "x column name");
    fit->add_option("--ycol", fit_y, "y column name");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_d->parsed()) return run_solve_diffusive(flags);
        if (solve_j->parsed()) return run_solve_jump(flags);
        if (extract->parsed()) return run_extract_policy(flags);
        if (evaluate->parsed()) return run_evaluate_policy(flags, policy_path);
        if (assume->parsed()) return run_check_assumptions(flags, assume_p, assume_mc);
        if (sweep->parsed()) return run_sweep_cmd(flags);
        if (fit->parsed()) return run_fit(fit_input, fit_x, fit_y);
    } catch (const ConfigError& ex) {
        std::fprintf(stderr, "configuration error: %s\n", ex.what());
        return 1;
    } catch (const ContractViolation& ex) {
        std::fprintf(stderr, "usage error: %s\n", ex.what());
        return 1;
    } catch (const NumericalError& ex) {
        std::fprintf(stderr, "numerical failure: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 0;
}
