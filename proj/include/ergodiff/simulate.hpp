#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "policy.hpp"
#include "random.hpp"

namespace ergodiff {

struct SimConfig {
    double T = 1000.0;
    int num_paths = 1000;
    std::uint64_t seed = 1;
    double burn_in_fraction = 0.0; // fraction of [0,T] discarded before accumulating
    double x0 = 0.0;
    bool keep_paths = false;

    void validate() const {
        if (!(T > 0.0)) throw ConfigError("sim config: T must be positive");
        if (num_paths < 1) throw ConfigError("sim config: num_paths must be at least 1");
        if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
            throw ConfigError("sim config: burn_in_fraction must lie in [0,1)");
    }
};

/// Noise stream plus a separate clock engine for the jump times.
class PathStream {
public:
    explicit PathStream(std::uint64_t seed)
        : noise_(derive_seed(seed, 0x4E)), clock_(make_engine(derive_seed(seed, 0xC1))) {}

    NoiseStream& noise() { return noise_; }
    Engine& clock() { return clock_; }

private:
    NoiseStream noise_;
    Engine clock_;
};

struct PathResult {
    double reward_average = 0.0;
    long jump_count = 0;
    double final_state = 0.0;
};

struct EstimateWithCI {
    double mean = 0.0;
    double std_error = 0.0;
    int num_paths = 0;
    std::vector<PathResult> per_path; // retained when cfg.keep_paths
};

/// One trajectory of the controlled jump process on [0, T]: jump epochs form
/// a Poisson stream of rate 1/eps drawn as sequential exponential gaps; at
/// each epoch the control a = policy(X-) is applied, the reward r(X-, a)
/// accrues, and the state moves by b_eps(X-, a, e) with a fresh mark e.
/// Returns eps * (sum of rewards after the burn-in prefix) / effective
/// horizon, the jump count and the final state.
inline PathResult simulate_path(const JumpModel& model, const PolicyMap& policy,
                                const SimConfig& cfg, PathStream& stream) {
    cfg.validate();
    if (!(model.epsilon > 0.0 && model.epsilon < 1.0))
        throw ContractViolation("simulate_path: epsilon must lie in (0,1)");
    const double burn_time = cfg.burn_in_fraction * cfg.T;
    const double horizon = cfg.T - burn_time;
    double x = cfg.x0;
    double t = exponential(stream.clock(), model.epsilon);
    double acc = 0.0;
    long jumps = 0;
    while (t <= cfg.T) {
        const double a = policy(x);
        if (t > burn_time) acc += model.reward(x, a);
        const Noise4 e = sample_noise(model.noise, stream.noise());
        x += jump_increment(model, x, a, e);
        if (!std::isfinite(x)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "simulate_path: state blew up at t=%.6g", t);
            throw NumericalError(buf);
        }
        ++jumps;
        t += exponential(stream.clock(), model.epsilon);
    }
    PathResult out;
    out.reward_average = model.epsilon * acc / horizon;
    out.jump_count = jumps;
    out.final_state = x;
    return out;
}

/// Monte-Carlo estimate of the ergodic average under a fixed policy:
/// cfg.num_paths independent trajectories with per-path streams derived from
/// (seed, path index); the aggregation order is fixed, so the estimate is
/// identical for any worker count. A failing path aborts the estimate,
/// reporting the smallest failing index.
inline EstimateWithCI estimate_rho(const JumpModel& model, const PolicyMap& policy,
                                   const SimConfig& cfg, int threads = 1) {
    cfg.validate();
    const int n = cfg.num_paths;
    std::vector<PathResult> results(static_cast<std::size_t>(n));
    std::vector<std::string> errors(static_cast<std::size_t>(n));

    auto run_range = [&](int begin, int end) {
        for (int p = begin; p < end; ++p) {
            try {
                PathStream stream(derive_seed(cfg.seed, 0x5A7B, static_cast<std::uint64_t>(p)));
                results[static_cast<std::size_t>(p)] = simulate_path(model, policy, cfg, stream);
            } catch (const std::exception& ex) {
                errors[static_cast<std::size_t>(p)] = ex.what();
            }
        }
    };

    if (threads <= 1 || n == 1) {
        run_range(0, n);
    } else {
        const int workers = std::min(threads, n);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        const int chunk = (n + workers - 1) / workers;
        for (int wi = 0; wi < workers; ++wi)
            pool.emplace_back(run_range, wi * chunk, std::min(n, (wi + 1) * chunk));
        for (auto& th : pool) th.join();
    }

    for (int p = 0; p < n; ++p)
        if (!errors[static_cast<std::size_t>(p)].empty())
            throw NumericalError("estimate_rho: path " + std::to_string(p) + " failed: " +
                                 errors[static_cast<std::size_t>(p)]);

    EstimateWithCI est;
    est.num_paths = n;
    double mean = 0.0;
    for (const auto& r : results) mean += r.reward_average;
    mean /= n;
    double ss = 0.0;
    for (const auto& r : results) {
        const double d = r.reward_average - mean;
        ss += d * d;
    }
    est.mean = mean;
    est.std_error = n > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n)) : 0.0;
    if (cfg.keep_paths) est.per_path = std::move(results);
    return est;
}

} // namespace ergodiff
