#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <vector>

#include "ergodiff/ergodiff.hpp"

using namespace ergodiff;

TEST_CASE("minimal config fills documented defaults") {
    const ExperimentPlan plan =
        parse_config_text("model = auction-v1\nepsilon = [0.5]\nh = 0.02\n");
    CHECK(plan.model == std::string(kAuctionPresetName));
    CHECK(plan.epsilons == std::vector<double>{0.5});
    CHECK(plan.h == 0.02);
    CHECK(plan.schedule == "fixed");
    CHECK(plan.extent == 20.0);
    CHECK(plan.gamma == 100);
    CHECK(plan.mollifier_n == 64);
    CHECK(plan.sim_T == 1000.0);
    CHECK(plan.sim_paths == 1000);
    CHECK(plan.rvi_tol == 1e-9);
    CHECK(plan.pi_max_iter == 100);
    CHECK(plan.jump_stage);
    CHECK(!plan.independent_sampling);
}

TEST_CASE("sweep-reproduction config round trips the benchmark settings") {
    const ExperimentPlan plan = parse_config_text(
        "model = auction-v1\n"
        "epsilon = [0.5, 0.25, 0.125, 0.0625]\n"
        "gamma = 100\n"
        "sim_T = 1000\n"
        "sim_paths = 1000\n"
        "h = 0.005\n"
        "extent = 2.5\n"
        "seed = 20240817\n");
    CHECK(plan.epsilons.size() == 4);
    CHECK(plan.gamma == 100);
    CHECK(plan.sim_T == 1000.0);
    CHECK(plan.sim_paths == 1000);
    CHECK(plan.seed == 20240817);
}

TEST_CASE("grid schedule selection") {
    const ExperimentPlan q = parse_config_text("schedule = quarter\nh = 0.01\n");
    CHECK(q.schedule == "quarter");
    // kappa = ceil(0.01^{-1/4}) = 4 under the quarter rule
    CHECK(kappa_quarter_rule(q.h) == 4);
    CHECK_THROWS_WITH_AS(parse_config_text("schedule = cubic\n"),
                         doctest::Contains("'fixed' or 'quarter'"), ConfigError);
}

TEST_CASE("config errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_config_text("epsilon = [0]\n"), doctest::Contains("line 1"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("h = 0.02\nwat = 1\n"),
                         doctest::Contains("line 2: unknown key 'wat'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("h 0.02\n"), doctest::Contains("expected key = value"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("epsilon = [1.5]\n"), doctest::Contains("(0,1)"),
                         ConfigError);
    CHECK_THROWS_AS(parse_config("/nonexistent/path/config.txt"), ConfigError);
}

TEST_CASE("noise marginals parse and validate") {
    const ExperimentPlan plan = parse_config_text(
        "model = custom\n"
        "noise_e2 = lognormal(0.1, 0.4)\n"
        "noise_e3 = two_point(-0.5, 0.5, 0.5)\n");
    CHECK(plan.law.e2.kind == Marginal::Kind::LogNormal);
    CHECK(plan.law.e2.p1 == 0.1);
    CHECK(plan.law.e3.kind == Marginal::Kind::TwoPoint);

    CHECK_THROWS_WITH_AS(parse_config_text("noise_e1 = cauchy(0,1)\n"),
                         doctest::Contains("unknown marginal"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("model = custom\nnoise_e3 = normal(1, 0.25)\n"),
                         doctest::Contains("noise law invalid"), ConfigError);
    // the named preset pins the benchmark law
    CHECK_THROWS_WITH_AS(parse_config_text("noise_e2 = lognormal(0, 0.4)\n"),
                         doctest::Contains("model = custom"), ConfigError);
}

TEST_CASE("power-law fits") {
    SUBCASE("exact on noiseless power laws") {
        std::vector<std::pair<double, double>> pts;
        for (double x : {1.0, 2.0, 4.0, 8.0}) pts.emplace_back(x, 3.0 * std::sqrt(x));
        const RateFit fit = fit_rate(pts);
        CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
        CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));

        pts.clear();
        for (double x : {0.5, 1.0, 2.0}) pts.emplace_back(x, std::pow(x, -1.5));
        CHECK(fit_rate(pts).slope == doctest::Approx(-1.5).epsilon(1e-12));
    }

    SUBCASE("mild multiplicative noise keeps the slope near 1/2") {
        std::mt19937_64 rng(2024);
        std::vector<std::pair<double, double>> pts;
        for (double x : {1.0, 2.0, 4.0, 8.0, 16.0}) {
            const double noise = 1.0 + 0.05 * (2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0);
            pts.emplace_back(x, std::sqrt(x) * noise);
        }
        const RateFit fit = fit_rate(pts);
        CHECK(fit.slope > 0.4);
        CHECK(fit.slope < 0.6);
    }

    SUBCASE("contract checks") {
        std::vector<std::pair<double, double>> two{{1.0, 1.0}, {2.0, 2.0}};
        CHECK_THROWS_AS(fit_rate(two), ContractViolation);
        std::vector<std::pair<double, double>> neg{{1.0, 1.0}, {2.0, -2.0}, {3.0, 1.0}};
        CHECK_THROWS_AS(fit_rate(neg), ContractViolation);
    }
}

namespace {

std::vector<RunRecord> fixture_records() {
    std::vector<RunRecord> recs;
    const double eps[] = {0.5, 0.25, 0.125, 0.0625};
    const double rj[] = {0.41, 0.40, 0.386, 0.384};
    const double pe[] = {0.389, 0.386, 0.384, 0.3835};
    const double tj[] = {50.0, 200.0, 1000.0, 4600.0};
    for (int i = 0; i < 4; ++i) {
        RunRecord r;
        r.experiment_id = "fixture";
        r.epsilon = eps[i];
        r.h = std::pow(eps[i], 1.5);
        r.kappa = static_cast<int>(std::ceil(20.0 * std::pow(eps[i], -1.5)));
        r.N = r.kappa;
        r.gamma = 100;
        r.h_diffusive = 0.005;
        r.rho_diffusive = 0.3823;
        r.rho_jump = rj[i];
        r.rho_policy_estimate = pe[i];
        r.rho_policy_se = 3e-4;
        r.wall_time_diffusive_ms = 21000.0;
        r.wall_time_jump_ms = tj[i];
        r.seed = 1;
        recs.push_back(r);
    }
    return recs;
}

} // namespace

TEST_CASE("plot data projections") {
    const auto recs = fixture_records();

    SUBCASE("value gap uses the finest diffusive mesh as reference") {
        const PlotData pd = emit_plot_data(recs, PlotKind::ValueGap);
        CHECK(pd.primary.size() == 4);
        CHECK(pd.primary[0].second == doctest::Approx(std::abs(0.41 - 0.3823)));
        // header + 4 data rows
        CHECK(std::count(pd.csv.begin(), pd.csv.end(), '\n') == 5);
    }

    SUBCASE("cost mode carries both series") {
        const PlotData pd = emit_plot_data(recs, PlotKind::Cost);
        CHECK(pd.csv.find("jump_ms,diffusive_ms") != std::string::npos);
        CHECK(pd.svg.find("diffusive solver") != std::string::npos);
    }

    SUBCASE("byte-stable for identical inputs") {
        const PlotData a = emit_plot_data(recs, PlotKind::PolicyGap);
        const PlotData b = emit_plot_data(recs, PlotKind::PolicyGap);
        CHECK(a.csv == b.csv);
        CHECK(a.svg == b.svg);
    }

    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(emit_plot_data({}, PlotKind::Cost), ContractViolation);
    }
}

TEST_CASE("schedule fields are consistent on real sweep records") {
    ExperimentPlan plan;
    plan.epsilons = {0.5};
    plan.h = 0.05;
    plan.extent = 2.0;
    plan.gamma = 10;
    plan.sim_T = 20.0;
    plan.sim_paths = 10;
    plan.seed = 4242;
    const auto recs = run_sweep(plan);
    REQUIRE(recs.size() == 1);
    const RunRecord& r = recs[0];
    CHECK(r.h == doctest::Approx(std::pow(0.5, 1.5)).epsilon(1e-15));
    CHECK(r.kappa == static_cast<int>(std::ceil(20.0 * std::pow(0.5, -1.5))));
    CHECK(r.N == r.kappa);
    CHECK(std::isfinite(r.rho_diffusive));
    CHECK(r.rho_jump.has_value());
}

TEST_CASE("end-to-end sweep determinism") {
    ExperimentPlan plan;
    plan.epsilons = {0.5};
    plan.h = 0.05;
    plan.extent = 2.0;
    plan.gamma = 20;
    plan.mollifier_n = 8;
    plan.sim_T = 50.0;
    plan.sim_paths = 20;
    plan.seed = 77;

    const auto r1 = run_sweep(plan);
    const auto r2 = run_sweep(plan);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].rho_diffusive == r2[i].rho_diffusive); // bit-identical
        CHECK(r1[i].rho_jump == r2[i].rho_jump);
        CHECK(r1[i].rho_policy_estimate == r2[i].rho_policy_estimate);
        CHECK(r1[i].rho_policy_se == r2[i].rho_policy_se);
    }

    // CSV bytes agree once the (inherently nondeterministic) wall-time columns
    // are masked
    auto mask_times = [](std::vector<RunRecord> rs) {
        for (auto& r : rs) {
            r.wall_time_diffusive_ms = 0.0;
            r.wall_time_jump_ms = 0.0;
        }
        return records_to_csv(rs);
    };
    CHECK(mask_times(r1) == mask_times(r2));

    // derived plot data is byte-identical as-is
    CHECK(emit_plot_data(r1, PlotKind::ValueGap).csv == emit_plot_data(r2, PlotKind::ValueGap).csv);
    CHECK(emit_plot_data(r1, PlotKind::ValueGap).svg == emit_plot_data(r2, PlotKind::ValueGap).svg);
    CHECK(emit_plot_data(r1, PlotKind::PolicyGap).csv ==
          emit_plot_data(r2, PlotKind::PolicyGap).csv);
}

TEST_CASE("quarter schedule solves on its shrunken domain") {
    ExperimentPlan plan;
    plan.schedule = "quarter";
    plan.h = 0.01; // kappa = 4, extent 0.04
    const DiffusionModel m = plan_diffusion_model(plan);
    const Grid g = plan_diffusive_grid(plan, m.sigma);
    CHECK(g.kappa == 4);
    CHECK(check_cfl(g, m).kernel_ok());
    const ErgodicSolution sol = rvi_solve(g, m, make_control_grid(10), 1e-10, 500000);
    CHECK(std::isfinite(sol.rho));
    CHECK(sol.w[static_cast<std::size_t>(g.ref_index)] ==
          doctest::Approx(sol.rho * g.dt).epsilon(1e-10));
}

TEST_CASE("records reject non-finite values") {
    RunRecord r;
    r.experiment_id = "x";
    r.epsilon = 0.5;
    r.h = 0.1;
    r.h_diffusive = 0.02;
    r.rho_diffusive = 0.3;
    CHECK_NOTHROW(r.validate());
    r.rho_jump = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(r.validate(), NumericalError);
}

TEST_CASE("jump stage can be disabled") {
    ExperimentPlan plan;
    plan.epsilons = {0.5};
    plan.h = 0.05;
    plan.extent = 2.0;
    plan.gamma = 10;
    plan.jump_stage = false;
    plan.sim_T = 20.0;
    plan.sim_paths = 5;
    plan.seed = 9;
    const auto recs = run_sweep(plan);
    REQUIRE(recs.size() == 1);
    CHECK(!recs[0].rho_jump.has_value());
    CHECK(std::isfinite(recs[0].rho_diffusive));
    CHECK(recs[0].rho_policy_estimate.has_value());
}

TEST_CASE("solution and policy serialization formats") {
    const DiffusionModel m = make_auction_diffusion();
    const Grid g = make_grid(20, 0.05, std::nullopt, std::sqrt(2.0) * m.sigma);
    const ControlGrid cg = make_control_grid(4);
    const ErgodicSolution sol = rvi_solve(g, m, cg, 1e-9, 200000);

    const std::string csv = solution_to_csv(g, sol, cg);
    CHECK(csv.rfind("index,z,w,policy_action\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == g.size() + 1);

    const std::string scalars = solution_scalars_csv(sol);
    CHECK(scalars.rfind("rho,iterations,residual,wall_time_ms\n", 0) == 0);

    std::vector<double> actions(static_cast<std::size_t>(g.size()), 0.5);
    const std::string pol = policy_to_csv(g, actions, 8, 4, "piecewise-linear");
    CHECK(pol.find("# mollifier_n=8 gamma=4") != std::string::npos);
    CHECK(pol.find("z,action") != std::string::npos);
}
