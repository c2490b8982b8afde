#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "errors.hpp"

namespace ergodiff {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes by Newton iteration on the Legendre recurrence. Cached per order.
inline const GaussLegendre& gauss_legendre(int order) {
    // deque keeps references stable when new orders are added mid-use
    static thread_local std::deque<std::pair<int, GaussLegendre>> cache;
    for (auto& entry : cache)
        if (entry.first == order) return entry.second;

    GaussLegendre rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < order; ++i) {
        double x = std::cos(pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 1; k < order; ++k) {
                const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    cache.emplace_back(order, std::move(rule));
    return cache.back().second;
}

/// Fixed-order Gauss-Legendre on [a, b].
template <class F>
double integrate_gl(F&& f, double a, double b, int order) {
    const auto& rule = gauss_legendre(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < order; ++i)
        acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return acc * half;
}

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0; // accumulated error estimate
    long evaluations = 0;
};

namespace detail {

template <class F>
double adaptive_segment(F& f, double a, double b, double tol, int depth, int max_depth,
                        QuadratureResult& out) {
    const double whole = integrate_gl(f, a, b, 15);
    const double mid = 0.5 * (a + b);
    const double left = integrate_gl(f, a, mid, 15);
    const double right = integrate_gl(f, mid, b, 15);
    out.evaluations += 45;
    const double err = std::abs(left + right - whole);
    if (err <= tol || depth >= max_depth) {
        out.abs_error += err;
        return left + right;
    }
    return adaptive_segment(f, a, mid, 0.5 * tol, depth + 1, max_depth, out) +
           adaptive_segment(f, mid, b, 0.5 * tol, depth + 1, max_depth, out);
}

} // namespace detail

/// Adaptive Gauss-Legendre over pre-split segments. `points` holds the sorted
/// segment boundaries (endpoints plus interior breakpoints, e.g. integrand
/// kinks). The absolute tolerance is derived from a rough first pass and
/// `rel_tol`; the achieved error estimate is reported in the result.
template <class F>
QuadratureResult integrate_adaptive(F&& f, std::span<const double> points, double rel_tol,
                                    int max_depth = 30) {
    if (points.size() < 2) throw ContractViolation("integrate_adaptive: need at least 2 points");
    QuadratureResult out;
    double rough = 0.0;
    for (std::size_t s = 0; s + 1 < points.size(); ++s) {
        rough += std::abs(integrate_gl(f, points[s], points[s + 1], 15));
        out.evaluations += 15;
    }
    const double tol_total = rel_tol * std::max(rough, 1e-300);
    const double tol_seg = tol_total / static_cast<double>(points.size() - 1);
    double acc = 0.0;
    for (std::size_t s = 0; s + 1 < points.size(); ++s)
        acc += detail::adaptive_segment(f, points[s], points[s + 1], tol_seg, 0, max_depth, out);
    out.value = acc;
    return out;
}

} // namespace ergodiff
