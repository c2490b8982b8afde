#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <span>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "solvers.hpp"

namespace ergodiff {

/// Monte-Carlo transition kernels of the jump chain: for every (state, action)
/// pair the empirical distribution of z_i + b_eps(z_i, a_j, e) over N noise
/// draws, projected to the nearest grid point (clamped at the ends). Rows are
/// stored compressed as sorted (column, count) pairs; probabilities are
/// count/N, so every row sums to one exactly.
///
/// By default one batch of N draws is shared across all (state, action) pairs
/// (common random numbers); an independent-sampling mode draws a fresh batch
/// per pair from a seed derived from (seed, i, j).
struct EmpiricalKernelSet {
    Grid grid;
    ControlGrid control_grid;
    double epsilon = 0.0;
    int num_samples = 0;
    std::uint64_t seed = 0;
    bool common_random_numbers = true;

    std::vector<std::uint64_t> row_ptr; // ns*na + 1
    std::vector<std::uint32_t> cols;
    std::vector<std::uint32_t> counts;

    int ns() const { return grid.size(); }
    int na() const { return control_grid.count(); }

    std::size_t row_begin(int i, int j) const {
        return row_ptr[static_cast<std::size_t>(i) * na() + j];
    }
    std::size_t row_end(int i, int j) const {
        return row_ptr[static_cast<std::size_t>(i) * na() + j + 1];
    }

    /// (P^{a_j} w)(z_i)
    double row_dot(int i, int j, std::span<const double> w) const {
        double acc = 0.0;
        for (std::size_t k = row_begin(i, j); k < row_end(i, j); ++k)
            acc += static_cast<double>(counts[k]) * w[cols[k]];
        return acc / num_samples;
    }

    /// Dense probability row, mostly for tests and inspection.
    std::vector<double> dense_row(int i, int j) const {
        std::vector<double> out(static_cast<std::size_t>(ns()), 0.0);
        for (std::size_t k = row_begin(i, j); k < row_end(i, j); ++k)
            out[cols[k]] = static_cast<double>(counts[k]) / num_samples;
        return out;
    }

    /// Row-compressed matrix P^pi for a per-state policy (indices into the
    /// control grid).
    SparseRows policy_matrix(std::span<const int> policy) const {
        if (static_cast<int>(policy.size()) != ns())
            throw ContractViolation("policy_matrix: policy length mismatch");
        SparseRows P;
        P.n = ns();
        P.ptr.assign(1, 0);
        for (int i = 0; i < ns(); ++i) {
            const int j = policy[static_cast<std::size_t>(i)];
            for (std::size_t k = row_begin(i, j); k < row_end(i, j); ++k) {
                P.col.push_back(static_cast<int>(cols[k]));
                P.val.push_back(static_cast<double>(counts[k]) / num_samples);
            }
            P.ptr.push_back(static_cast<std::int64_t>(P.col.size()));
        }
        return P;
    }
};

inline EmpiricalKernelSet estimate_empirical_kernels(const Grid& g, const JumpModel& model,
                                                     const ControlGrid& cg, int num_samples,
                                                     std::uint64_t seed,
                                                     bool common_random_numbers = true) {
    if (num_samples < 1)
        throw ContractViolation("estimate_empirical_kernels: need at least one sample");
    model.validate();

    EmpiricalKernelSet k;
    k.grid = g;
    k.control_grid = cg;
    k.epsilon = model.epsilon;
    k.num_samples = num_samples;
    k.seed = seed;
    k.common_random_numbers = common_random_numbers;

    const int ns = g.size(), na = cg.count();
    const std::size_t nrows = static_cast<std::size_t>(ns) * na;
    k.row_ptr.assign(nrows + 1, 0);

    std::vector<Noise4> batch;
    if (common_random_numbers) {
        batch.resize(static_cast<std::size_t>(num_samples));
        NoiseStream stream(derive_seed(seed, 0x4B65));
        for (auto& e : batch) e = sample_noise(model.noise, stream);
    }

    const double sqrt_eps = std::sqrt(model.epsilon);
    std::vector<std::uint32_t> scratch(static_cast<std::size_t>(ns), 0);
    std::vector<std::uint32_t> touched;
    std::vector<double> b2_part(static_cast<std::size_t>(num_samples));

    for (int i = 0; i < ns; ++i) {
        const double x = g.point(i);
        if (common_random_numbers)
            for (int s = 0; s < num_samples; ++s)
                b2_part[static_cast<std::size_t>(s)] = sqrt_eps * model.b2(x, batch[static_cast<std::size_t>(s)]);
        for (int j = 0; j < na; ++j) {
            const double a = cg.action(j);
            touched.clear();
            if (common_random_numbers) {
                for (int s = 0; s < num_samples; ++s) {
                    const double y = x + model.epsilon * model.b1(x, a, batch[static_cast<std::size_t>(s)]) +
                                     b2_part[static_cast<std::size_t>(s)];
                    const auto idx = static_cast<std::uint32_t>(g.project(y));
                    if (scratch[idx]++ == 0) touched.push_back(idx);
                }
            } else {
                NoiseStream stream(derive_seed(seed, 0x4B65 + 1 + static_cast<std::uint64_t>(i),
                                               static_cast<std::uint64_t>(j)));
                for (int s = 0; s < num_samples; ++s) {
                    const Noise4 e = sample_noise(model.noise, stream);
                    const double y = x + model.epsilon * model.b1(x, a, e) + sqrt_eps * model.b2(x, e);
                    const auto idx = static_cast<std::uint32_t>(g.project(y));
                    if (scratch[idx]++ == 0) touched.push_back(idx);
                }
            }
            std::sort(touched.begin(), touched.end());
            for (const std::uint32_t c : touched) {
                k.cols.push_back(c);
                k.counts.push_back(scratch[c]);
                scratch[c] = 0;
            }
            k.row_ptr[static_cast<std::size_t>(i) * na + j + 1] = k.cols.size();
        }
    }
    return k;
}

/// Policy iteration for the ergodic jump fixed point
///
///   0 = max_a { (1/eps)(P^a - I) W - e w(ref) + R(a) },   rho = w(ref):
///
/// alternate exact policy evaluation (linear solve) with a greedy improvement
/// sweep; stop when the policy repeats or the Bellman defect drops below tol.
/// A revisited non-adjacent policy (cycle) returns the best iterate so far
/// with a warning flag.
inline ErgodicSolution policy_iterate(const EmpiricalKernelSet& kernels, const RewardTable& reward,
                                      double epsilon, double tol = 1e-9, int max_iter = 100) {
    const auto t0 = std::chrono::steady_clock::now();
    const int ns = kernels.ns(), na = kernels.na();
    if (reward.ns != ns || reward.na != na)
        throw ContractViolation("policy_iterate: reward table shape mismatch");
    const int ref = kernels.grid.ref_index;
    const double inv_eps = 1.0 / epsilon;

    std::vector<int> policy(static_cast<std::size_t>(ns), 0);
    std::unordered_set<std::uint64_t> seen;
    auto policy_hash = [&](std::span<const int> p) {
        std::uint64_t hsh = 1469598103934665603ULL;
        for (int v : p) {
            hsh ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL;
            hsh *= 1099511628211ULL;
        }
        return hsh;
    };

    ErgodicSolution best;
    double best_defect = 1e300;

    for (int it = 1; it <= max_iter; ++it) {
        seen.insert(policy_hash(policy));
        const SparseRows P = kernels.policy_matrix(policy);
        std::vector<double> R(static_cast<std::size_t>(ns));
        for (int i = 0; i < ns; ++i) R[static_cast<std::size_t>(i)] = reward.at(i, policy[static_cast<std::size_t>(i)]);
        const PolicyEvalResult eval = policy_evaluate(P, R, epsilon, ref);

        // greedy improvement; ties to the smallest action index
        std::vector<int> next(static_cast<std::size_t>(ns), 0);
        double defect = 0.0;
        for (int i = 0; i < ns; ++i) {
            double bestv = -1e300;
            int bestj = 0;
            const double wi = eval.w[static_cast<std::size_t>(i)];
            for (int j = 0; j < na; ++j) {
                const double v = inv_eps * (kernels.row_dot(i, j, eval.w) - wi) + reward.at(i, j);
                if (v > bestv) {
                    bestv = v;
                    bestj = j;
                }
            }
            next[static_cast<std::size_t>(i)] = bestj;
            defect = std::max(defect, std::abs(bestv - eval.rho));
        }

        ErgodicSolution sol;
        sol.rho = eval.rho;
        sol.w = eval.w;
        sol.policy = next;
        sol.iterations = it;
        sol.residual = defect;
        if (defect < best_defect) {
            best_defect = defect;
            best = sol;
        }

        if (next == policy || defect <= tol) {
            sol.wall_time_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count();
            return sol;
        }
        if (seen.count(policy_hash(next))) {
            best.cycle_warning = true;
            best.wall_time_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
            return best;
        }
        policy = std::move(next);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "policy iteration: max_iter=%d reached, defect %.3e > %.3e",
                  max_iter, best_defect, tol);
    throw NumericalError(buf);
}

} // namespace ergodiff
