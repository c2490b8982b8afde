// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failed criteria.
//
//   A1  diffusive-solver h-convergence at fixed extent 20
//   A2  value-gap rate of the jump solve against the diffusive reference
//   A3  compute-cost scaling of the jump solver vs the flat diffusive cost
//   A4  suboptimality rate of the extracted policy
//   A5  generator-defect (residual) rate on the smoothed solved value
//   A6  oracle equivalences and determinism properties
//   A7  first-order correction does not worsen the value gap
//
// Everything below is seeded deterministically; rerunning reproduces the
// numbers bit for bit (wall times excepted).

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "ergodiff/ergodiff.hpp"
#include "oracles.hpp"

using namespace ergodiff;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void note(const std::string& text) {
    std::printf("       %s\n", text.c_str());
    std::fflush(stdout);
}

std::string fmt(double v, const char* f = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// A1: solve at h in {0.08, 0.04, 0.02, 0.01} with fixed extent 20; successive
// gaps |rho_h - rho_{h/2}| strictly decreasing, final gap <= 1e-3.
// ---------------------------------------------------------------------------
void run_a1() {
    const DiffusionModel model = make_auction_diffusion();
    const ControlGrid cg = make_control_grid(100);
    const double meshes[] = {0.08, 0.04, 0.02, 0.01};
    std::vector<double> rhos;
    std::vector<std::string> errors;
    for (double h : meshes) {
        try {
            const Grid g =
                make_grid(kappa_for_extent(20.0, h), h, std::nullopt, std::sqrt(2.0) * model.sigma);
            rhos.push_back(rvi_solve(g, model, cg, 1e-9, 4000000).rho);
        } catch (const std::exception& ex) {
            errors.emplace_back("h=" + fmt(h) + ": " + ex.what());
        }
    }
    if (rhos.size() == 4) {
        const double g1 = std::abs(rhos[0] - rhos[1]);
        const double g2 = std::abs(rhos[1] - rhos[2]);
        const double g3 = std::abs(rhos[2] - rhos[3]);
        const bool pass = g1 > g2 && g2 > g3 && g3 <= 1e-3;
        report("A1 diffusive-solver convergence", pass,
               "gaps " + fmt(g1) + " > " + fmt(g2) + " > " + fmt(g3) + ", final <= 1e-3");
        return;
    }
    report("A1 diffusive-solver convergence", false,
           "all four solves refused at extent 20 (" + errors.front() + ")");
    note("the three-point scheme needs |mu| h <= sigma^2 at every grid point; with extent");
    note("20 the drift reaches |mu| ~ (20 + 1.13)/2 = 10.6 while sigma^2 = 1/12, so the");
    note("pointwise check already fails for every h >= 0.008 and none of the four meshes");
    note("can run. Informational study of the same criterion on a valid domain:");
    const double vh[] = {0.04, 0.02, 0.01, 0.005};
    std::vector<double> vr;
    for (double h : vh) {
        const Grid g =
            make_grid(kappa_for_extent(2.5, h), h, std::nullopt, std::sqrt(2.0) * model.sigma);
        vr.push_back(rvi_solve(g, model, cg, 1e-11, 8000000).rho);
    }
    const double g1 = std::abs(vr[0] - vr[1]);
    const double g2 = std::abs(vr[1] - vr[2]);
    const double g3 = std::abs(vr[2] - vr[3]);
    note("[info] extent 2.5, h in {0.04, 0.02, 0.01, 0.005}: rho = " + fmt(vr[0], "%.8f") + ", " +
         fmt(vr[1], "%.8f") + ", " + fmt(vr[2], "%.8f") + ", " + fmt(vr[3], "%.8f"));
    note("[info] gaps " + fmt(g1, "%.3e") + (g1 > g2 ? " > " : " !> ") + fmt(g2, "%.3e") +
         (g2 > g3 ? " > " : " !> ") + fmt(g3, "%.3e") +
         (g1 > g2 && g2 > g3 && g3 <= 1e-3 ? "  (decreasing, final <= 1e-3)" : ""));
}

// ---------------------------------------------------------------------------
// A2/A3/A4 share one sweep over eps in {0.5, 0.25, 0.125, 0.0625}; the
// eps = 0.25 jump value feeds A7.
// ---------------------------------------------------------------------------
std::optional<double> run_a2_a3_a4() {
    ExperimentPlan plan;
    plan.epsilons = {0.5, 0.25, 0.125, 0.0625};
    plan.h = 0.005;
    plan.extent = 2.5;
    plan.gamma = 100;
    plan.mollifier_n = 64;
    plan.sim_T = 1000.0;
    plan.sim_paths = 1000;
    plan.seed = 20240817;
    plan.independent_sampling = true; // fresh batch per (state, action) pair
    plan.fail_fast = true;

    std::vector<RunRecord> records;
    try {
        records = run_sweep(plan, [](const std::string& s) { note("[sweep] " + s); });
    } catch (const std::exception& ex) {
        report("A2 value-gap rate", false, std::string("sweep failed: ") + ex.what());
        report("A3 compute-cost scaling", false, "sweep failed");
        report("A4 policy suboptimality rate", false, "sweep failed");
        return std::nullopt;
    }

    try {
        const PlotData vg = emit_plot_data(records, PlotKind::ValueGap);
        const double slope = vg.fit ? vg.fit->slope : 0.0;
        const bool pass = vg.fit.has_value() && slope >= 0.3 && slope <= 0.7;
        report("A2 value-gap rate", pass,
               "slope " + fmt(slope) + " in [0.30, 0.70] (r2 = " +
                   fmt(vg.fit ? vg.fit->r_squared : 0.0) + ")");
        for (const auto& [e, gap] : vg.primary)
            note("eps=" + fmt(e) + "  |rho_jump - rho_ref| = " + fmt(gap, "%.6f"));
    } catch (const std::exception& ex) {
        report("A2 value-gap rate", false, ex.what());
    }

    try {
        const PlotData cost = emit_plot_data(records, PlotKind::Cost);
        const double slope = cost.fit ? cost.fit->slope : 0.0;
        double dmin = 1e300, dmax = 0.0;
        for (const auto& r : records) {
            dmin = std::min(dmin, r.wall_time_diffusive_ms);
            dmax = std::max(dmax, r.wall_time_diffusive_ms);
        }
        const double flat_ratio = dmax / std::max(dmin, 1e-9);
        const bool pass = cost.fit.has_value() && slope >= -1.9 && slope <= -1.1 && flat_ratio <= 2.0;
        report("A3 compute-cost scaling", pass,
               "jump-cost slope " + fmt(slope) + " in [-1.90, -1.10]; diffusive max/min ratio " +
                   fmt(flat_ratio) + " <= 2");
        for (const auto& r : records)
            note("eps=" + fmt(r.epsilon) + "  jump " + fmt(r.wall_time_jump_ms, "%.0f") +
                 " ms, diffusive " + fmt(r.wall_time_diffusive_ms, "%.0f") +
                 " ms (diffusive problem solved once per mesh, time shared across records)");
        note("jump-stage work is Theta(states x actions x samples) = Theta(eps^-3) under the");
        note("schedule kappa = N = ceil(20 eps^-3/2) with a fixed action grid, so the measured");
        note("slope settles between -2.2 and -2.6 rather than inside the stated band: a slope");
        note("of -1.5 would need per-state work that stays bounded as eps shrinks, which");
        note("per-(state, action) empirical kernels cannot provide.");
    } catch (const std::exception& ex) {
        report("A3 compute-cost scaling", false, ex.what());
    }

    try {
        std::vector<std::pair<double, double>> gaps;
        for (const auto& r : records)
            if (r.epsilon >= 0.1 && r.rho_jump && r.rho_policy_estimate)
                gaps.emplace_back(r.epsilon, std::abs(*r.rho_policy_estimate - *r.rho_jump));
        const RateFit fit = fit_rate(gaps);
        const bool pass = fit.slope >= 0.25 && fit.slope <= 0.75;
        report("A4 policy suboptimality rate", pass,
               "slope " + fmt(fit.slope) + " in [0.25, 0.75] (r2 = " + fmt(fit.r_squared) + ")");
        for (const auto& [e, gap] : gaps)
            note("eps=" + fmt(e) + "  |policy estimate - rho_jump| = " + fmt(gap, "%.6f"));
    } catch (const std::exception& ex) {
        report("A4 policy suboptimality rate", false, ex.what());
    }

    for (const auto& r : records)
        if (std::abs(r.epsilon - 0.25) < 1e-12 && r.rho_jump) return *r.rho_jump;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// A5: log-log slope of max-over-grid |delta_r| on the smoothed solved value
// over eps in {0.5, 0.25, 0.125} lies in [0.3, 0.8].
// A7: at eps = 0.25 the corrected value is at least as close to the jump
// value as the uncorrected one.
// ---------------------------------------------------------------------------
void run_a5_a7(const std::optional<double>& rho_jump_025) {
    const NoiseLaw law = NoiseLaw::benchmark();
    const DiffusionModel model = make_auction_diffusion(law);
    const ControlGrid cg = make_control_grid(100);
    const Grid g = make_grid(63, 0.04, std::nullopt, std::sqrt(2.0) * model.sigma);
    ErgodicSolution base;
    try {
        base = rvi_solve(g, model, cg, 1e-9, 2000000);
    } catch (const std::exception& ex) {
        report("A5 residual rate", false, std::string("base solve failed: ") + ex.what());
        report("A7 correction term", false, "base solve failed");
        return;
    }

    try {
        const MollifiedValue mv = MollifiedValue::from_solution(g, base.w, base.rho * g.dt, 8);
        const C2Function w2 = C2Function::from_mollified(mv);
        std::vector<std::pair<double, double>> pts;
        for (double eps : {0.5, 0.25, 0.125}) {
            const JumpModel jm = make_auction_jump(eps, law);
            double worst = 0.0;
            for (int i = 0; i < g.size(); ++i)
                for (double a : {0.0, 0.5, 1.0}) {
                    NoiseStream stream(derive_seed(9001, static_cast<std::uint64_t>(i),
                                                   static_cast<std::uint64_t>(a * 4.0)));
                    worst = std::max(worst,
                                     std::abs(delta_r_residual(w2, jm, model, g.point(i), a, 800,
                                                               stream)
                                                  .value));
                }
            pts.emplace_back(eps, worst);
        }
        const RateFit fit = fit_rate(pts);
        const bool pass = fit.slope >= 0.3 && fit.slope <= 0.8;
        report("A5 residual rate", pass,
               "slope " + fmt(fit.slope) + " in [0.30, 0.80] (r2 = " + fmt(fit.r_squared) + ")");
        for (const auto& [e, w] : pts) note("eps=" + fmt(e) + "  max|delta_r| = " + fmt(w, "%.6f"));
    } catch (const std::exception& ex) {
        report("A5 residual rate", false, ex.what());
    }

    try {
        if (!rho_jump_025) throw NumericalError("no jump value at eps = 0.25 available");
        const JumpModel jm = make_auction_jump(0.25, law);
        CorrectionOptions opt;
        opt.gamma0 = 1.0;
        opt.mollifier_n = 8;
        opt.num_mc = 500;
        opt.seed = 9007;
        const CorrectionResult corr = correction_solve(g, model, base, jm, cg, opt);
        const double gap_base = std::abs(base.rho - *rho_jump_025);
        const double gap_corr = std::abs(corr.rho_corrected - *rho_jump_025);
        const bool pass = gap_corr <= gap_base;
        report("A7 correction term", pass,
               "|corrected - rho_jump| = " + fmt(gap_corr, "%.5f") + " <= " +
                   fmt(gap_base, "%.5f") + " = |base - rho_jump| (delta_rho = " +
                   fmt(corr.delta_rho, "%.5f") + ", f_max = " + fmt(corr.f_max, "%.2e") + ")");
    } catch (const std::exception& ex) {
        report("A7 correction term", false, ex.what());
    }
}

// ---------------------------------------------------------------------------
// A6: oracle equivalences and determinism, all fast.
// ---------------------------------------------------------------------------
void run_a6() {
    std::vector<std::string> problems;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    };

    // stationary oracle vs rvi on a 7-state instance
    {
        DiffusionModel m;
        m.sigma = 0.3;
        m.drift = [](double, double) { return 0.0; };
        m.reward = [](double x, double) { return x; };
        m.control_set = {0.0, 1.0};
        const Grid g = make_grid(3, 0.1, std::nullopt, std::sqrt(2.0) * 0.3);
        const ControlGrid cg = make_control_grid(0);
        const ErgodicSolution sol = rvi_solve(g, m, cg, 1e-12, 500000);
        std::vector<double> actions(7, 0.0);
        const auto dense = build_kernel(g, m, actions).dense();
        const auto pi = oracles::stationary_distribution(dense);
        std::vector<double> r(7);
        for (int i = 0; i < 7; ++i) r[static_cast<std::size_t>(i)] = g.point(i);
        expect(std::abs(sol.rho - oracles::dot(pi, r)) <= 1e-8,
               "rvi vs stationary oracle beyond 1e-8");
    }

    // stationary oracle vs policy_evaluate on a 3-state chain
    {
        oracles::Dense p{{0.2, 0.7, 0.1}, {0.4, 0.4, 0.2}, {0.1, 0.3, 0.6}};
        std::vector<double> r{1.0, -0.5, 2.0};
        const PolicyEvalResult res = policy_evaluate(SparseRows::from_dense(p), r, 0.125, 1);
        const auto pi = oracles::stationary_distribution(p);
        expect(std::abs(res.rho - oracles::dot(pi, r)) <= 1e-8,
               "policy_evaluate vs stationary oracle beyond 1e-8");
    }

    // kernel/finite-difference duality to 1e-12
    {
        const DiffusionModel m = make_auction_diffusion();
        const Grid g = make_grid(40, 0.05, std::nullopt, std::sqrt(2.0) * m.sigma);
        Engine rng = make_engine(5);
        std::vector<double> w(static_cast<std::size_t>(g.size()));
        for (auto& v : w) v = uniform01(rng) * 2.0 - 1.0;
        bool ok = true;
        for (double a : {0.0, 0.5, 1.0}) {
            std::vector<double> actions(static_cast<std::size_t>(g.size()), a);
            const TransitionKernel k = build_kernel(g, m, actions);
            for (int i = 1; i < g.size() - 1; ++i) {
                const double lhs = (k.row_dot(i, w) - w[static_cast<std::size_t>(i)]) / g.dt;
                if (std::abs(lhs - fd_apply(g, m, w, i, a)) > 1e-12) ok = false;
            }
        }
        expect(ok, "kernel/FD duality beyond 1e-12");
    }

    // constant-reward identities to 1e-10
    {
        DiffusionModel m;
        m.sigma = 0.4;
        m.drift = [](double x, double a) { return 0.3 * a - 0.5 * x; };
        m.reward = [](double, double) { return 1.234; };
        m.control_set = {0.0, 1.0};
        const Grid g = make_grid(10, 0.05, std::nullopt, std::sqrt(2.0) * 0.4);
        const ErgodicSolution sol = rvi_solve(g, m, make_control_grid(6), 1e-12, 500000);
        expect(std::abs(sol.rho - 1.234) <= 1e-10, "constant-reward rho identity beyond 1e-10");

        oracles::Dense p{{0.5, 0.5, 0.0}, {0.25, 0.5, 0.25}, {0.0, 0.6, 0.4}};
        std::vector<double> r(3, 1.234);
        const PolicyEvalResult res = policy_evaluate(SparseRows::from_dense(p), r, 0.5, 0);
        expect(std::abs(res.rho - 1.234) <= 1e-10,
               "constant-reward evaluation identity beyond 1e-10");
    }

    // coupled contraction: closed form -(1 - eps/3) within 4 SE
    {
        const JumpModel jm = make_auction_jump(0.25);
        const std::vector<std::pair<double, double>> pairs{{0.0, 1.0}, {-1.0, 2.0}};
        NoiseStream stream(6);
        const AssumptionReport rep = check_assumptions(jm, 1, 200000, pairs, stream);
        const double expect_ratio = -(1.0 - 0.25 / 3.0);
        for (const auto& probe : rep.probes) {
            const double se = probe.d_zeta_se / probe.zeta;
            expect(std::abs(probe.contraction_ratio - expect_ratio) <= 4.0 * se,
                   "contraction ratio misses -(1 - eps/3) by more than 4 SE");
        }
    }

    // determinism: kernels, solutions, estimates, CSV bytes
    {
        const JumpModel jm = make_auction_jump(0.5);
        const Grid g = make_grid(12, 0.3, std::nullopt, 1.0);
        const ControlGrid cg = make_control_grid(10);
        const auto k1 = estimate_empirical_kernels(g, jm, cg, 200, 88);
        const auto k2 = estimate_empirical_kernels(g, jm, cg, 200, 88);
        expect(k1.cols == k2.cols && k1.counts == k2.counts && k1.row_ptr == k2.row_ptr,
               "kernel estimation not byte-deterministic");
        const RewardTable rt = make_reward_table(g, cg, jm.reward);
        const ErgodicSolution s1 = policy_iterate(k1, rt, 0.5, 1e-9, 50);
        const ErgodicSolution s2 = policy_iterate(k2, rt, 0.5, 1e-9, 50);
        expect(s1.rho == s2.rho && s1.w == s2.w && s1.policy == s2.policy,
               "policy iteration not byte-deterministic");

        SimConfig cfg;
        cfg.T = 50.0;
        cfg.num_paths = 20;
        cfg.seed = 91;
        cfg.keep_paths = true;
        const auto e1 = estimate_rho(jm, PolicyMap::constant(0.5), cfg);
        const auto e2 = estimate_rho(jm, PolicyMap::constant(0.5), cfg, 4);
        bool same = e1.mean == e2.mean && e1.std_error == e2.std_error;
        for (std::size_t i = 0; same && i < e1.per_path.size(); ++i)
            same = e1.per_path[i].reward_average == e2.per_path[i].reward_average &&
                   e1.per_path[i].jump_count == e2.per_path[i].jump_count;
        expect(same, "simulation estimate depends on worker count or rerun");

        ExperimentPlan plan;
        plan.epsilons = {0.5};
        plan.h = 0.05;
        plan.extent = 2.0;
        plan.gamma = 20;
        plan.mollifier_n = 8;
        plan.sim_T = 50.0;
        plan.sim_paths = 20;
        plan.seed = 77;
        auto mask = [](std::vector<RunRecord> rs) {
            for (auto& r : rs) {
                r.wall_time_diffusive_ms = 0.0;
                r.wall_time_jump_ms = 0.0;
            }
            return records_to_csv(rs);
        };
        const auto r1 = run_sweep(plan);
        const auto r2 = run_sweep(plan);
        expect(mask(r1) == mask(r2), "sweep records differ between identical runs");
        expect(emit_plot_data(r1, PlotKind::ValueGap).svg ==
                   emit_plot_data(r2, PlotKind::ValueGap).svg,
               "plot output differs between identical runs");
    }

    if (problems.empty()) {
        report("A6 oracle equivalences", true,
               "stationary oracles to 1e-8, duality to 1e-12, constant-reward to 1e-10, "
               "contraction within 4 SE, determinism byte-exact");
    } else {
        report("A6 oracle equivalences", false, problems.front());
        for (std::size_t i = 1; i < problems.size(); ++i) note(problems[i]);
    }
}

} // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    run_a1();
    const std::optional<double> rho_jump_025 = run_a2_a3_a4();
    run_a5_a7(rho_jump_025);
    run_a6();
    std::printf("================\n%d criterion(s) failed\n", g_failures);
    return g_failures;
}
