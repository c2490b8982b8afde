#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "errors.hpp"

namespace ergodiff {

/// Minimal row-compressed nonnegative matrix with unit row sums.
struct SparseRows {
    int n = 0;
    std::vector<std::int64_t> ptr; // size n+1
    std::vector<int> col;
    std::vector<double> val;

    static SparseRows from_dense(const std::vector<std::vector<double>>& d) {
        SparseRows s;
        s.n = static_cast<int>(d.size());
        s.ptr.assign(1, 0);
        for (const auto& row : d) {
            for (int j = 0; j < s.n; ++j)
                if (row[static_cast<std::size_t>(j)] != 0.0) {
                    s.col.push_back(j);
                    s.val.push_back(row[static_cast<std::size_t>(j)]);
                }
            s.ptr.push_back(static_cast<std::int64_t>(s.col.size()));
        }
        return s;
    }

    double row_dot(int i, std::span<const double> w) const {
        double acc = 0.0;
        for (std::int64_t k = ptr[static_cast<std::size_t>(i)];
             k < ptr[static_cast<std::size_t>(i) + 1]; ++k)
            acc += val[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
        return acc;
    }
};

struct PolicyEvalResult {
    double rho = 0.0;
    std::vector<double> w;
    double residual = 0.0;
};

namespace detail {

/// Residual of (1/eps)(P - I) W - e W(ref) + R in the sup norm.
inline double eval_residual(const SparseRows& P, std::span<const double> R, double epsilon,
                            int ref, std::span<const double> W) {
    double res = 0.0;
    const double wref = W[static_cast<std::size_t>(ref)];
    for (int i = 0; i < P.n; ++i) {
        const double v = (P.row_dot(i, W) - W[static_cast<std::size_t>(i)]) / epsilon - wref +
                         R[static_cast<std::size_t>(i)];
        res = std::max(res, std::abs(v));
    }
    return res;
}

} // namespace detail

/// Solves the ergodic evaluation system
///
///   (1/eps) (P - I) W - e W(ref) + R = 0
///
/// for a fixed row-stochastic P. The reference-state coupling makes the
/// system nonsingular whenever ref is reachable. Dense LU up to 2000 states,
/// BiCGSTAB with diagonal preconditioning (SparseLU fallback) above. The
/// returned W satisfies W(ref) = rho by construction.
inline PolicyEvalResult policy_evaluate(const SparseRows& P, std::span<const double> R,
                                        double epsilon, int ref) {
    const int n = P.n;
    if (static_cast<int>(R.size()) != n)
        throw ContractViolation("policy_evaluate: reward size mismatch");
    if (ref < 0 || ref >= n) throw ContractViolation("policy_evaluate: ref out of range");

    // Reachability screen on small instances: every state must reach ref.
    if (n <= 64) {
        std::vector<char> hits_ref(static_cast<std::size_t>(n), 0);
        hits_ref[static_cast<std::size_t>(ref)] = 1;
        bool grew = true;
        while (grew) {
            grew = false;
            for (int i = 0; i < n; ++i) {
                if (hits_ref[static_cast<std::size_t>(i)]) continue;
                for (std::int64_t k = P.ptr[static_cast<std::size_t>(i)];
                     k < P.ptr[static_cast<std::size_t>(i) + 1]; ++k)
                    if (P.val[static_cast<std::size_t>(k)] > 0.0 &&
                        hits_ref[static_cast<std::size_t>(P.col[static_cast<std::size_t>(k)])]) {
                        hits_ref[static_cast<std::size_t>(i)] = 1;
                        grew = true;
                        break;
                    }
            }
        }
        for (int i = 0; i < n; ++i)
            if (!hits_ref[static_cast<std::size_t>(i)])
                throw NumericalError("policy_evaluate: reference state unreachable from state " +
                                     std::to_string(i));
    }

    const double inv_eps = 1.0 / epsilon;
    const double r_scale = [&] {
        double m = 1.0;
        for (double v : R) m = std::max(m, std::abs(v));
        return m;
    }();

    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = -R[static_cast<std::size_t>(i)];

    PolicyEvalResult out;
    out.w.resize(static_cast<std::size_t>(n));

    if (n <= 2000) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (std::int64_t k = P.ptr[static_cast<std::size_t>(i)];
                 k < P.ptr[static_cast<std::size_t>(i) + 1]; ++k)
                A(i, P.col[static_cast<std::size_t>(k)]) += inv_eps * P.val[static_cast<std::size_t>(k)];
            A(i, i) -= inv_eps;
            A(i, ref) -= 1.0;
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
        Eigen::VectorXd W = lu.solve(b);
        for (int i = 0; i < n; ++i) out.w[static_cast<std::size_t>(i)] = W[i];
        out.residual = detail::eval_residual(P, R, epsilon, ref, out.w);
        if (!(out.residual <= 1e-9 * r_scale)) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "policy_evaluate: dense solve residual %.3e exceeds 1e-9*||R|| "
                          "(rcond estimate %.3e)",
                          out.residual, lu.rcond());
            throw NumericalError(buf);
        }
    } else {
        using SpMat = Eigen::SparseMatrix<double>;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(P.val.size() + 2 * static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (std::int64_t k = P.ptr[static_cast<std::size_t>(i)];
                 k < P.ptr[static_cast<std::size_t>(i) + 1]; ++k)
                trip.emplace_back(i, P.col[static_cast<std::size_t>(k)],
                                  inv_eps * P.val[static_cast<std::size_t>(k)]);
            trip.emplace_back(i, i, -inv_eps);
            trip.emplace_back(i, ref, -1.0);
        }
        SpMat A(n, n);
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();

        Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> solver;
        solver.setTolerance(1e-12);
        solver.setMaxIterations(40000);
        solver.compute(A);
        Eigen::VectorXd W = solver.solve(b);
        bool ok = solver.info() == Eigen::Success;
        if (ok) {
            for (int i = 0; i < n; ++i) out.w[static_cast<std::size_t>(i)] = W[i];
            out.residual = detail::eval_residual(P, R, epsilon, ref, out.w);
            ok = out.residual <= 1e-9 * r_scale;
        }
        if (!ok) {
            // iterative solve stagnated; direct factorization
            Eigen::SparseLU<SpMat> slu;
            slu.analyzePattern(A);
            slu.factorize(A);
            if (slu.info() != Eigen::Success)
                throw NumericalError("policy_evaluate: sparse factorization failed (matrix "
                                     "singular or structurally deficient)");
            W = slu.solve(b);
            for (int i = 0; i < n; ++i) out.w[static_cast<std::size_t>(i)] = W[i];
            out.residual = detail::eval_residual(P, R, epsilon, ref, out.w);
            if (!(out.residual <= 1e-9 * r_scale)) {
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "policy_evaluate: residual %.3e exceeds 1e-9*||R|| after direct "
                              "fallback (system ill-conditioned)",
                              out.residual);
                throw NumericalError(buf);
            }
        }
    }
    out.rho = out.w[static_cast<std::size_t>(ref)];
    return out;
}

} // namespace ergodiff
