#pragma once

// Safeguarded Newton iteration for monotone scalar equations.
//
// The caller supplies a bracket [lo, hi] on which g changes sign. Each step
// tries a Newton update; if the update leaves the current bracket or the
// step is not at least twice as short as the one before it, the step falls
// back to bisection. Bisection alone guarantees convergence, so the only failure
// mode is exhausting the iteration budget.

#include <cmath>
#include <cstddef>
#include <utility>

#include "wbh/error.hpp"

namespace wbh::detail {

struct RootOptions {
    double rel_tol = 1e-15;   // on the bracket width, relative to |x|
    double abs_tol = 0.0;     // on the bracket width
    double value_tol = 0.0;   // |g(x)| at or below this stops immediately
    int max_iter = 200;
};

struct RootResult {
    double x;
    double value;
    int iterations;
};

/// Solves g(x) = 0 for a monotone g given as g(x) -> {value, derivative}.
/// g(lo) and g(hi) must have opposite signs (or one of them be zero).
template <class Fn>
RootResult solve_bracketed(Fn&& g, double lo, double hi, RootOptions opt = {}) {
    const double glo = g(lo).first;
    if (glo == 0.0) return {lo, 0.0, 0};
    const double ghi = g(hi).first;
    if (ghi == 0.0) return {hi, 0.0, 0};
    if ((glo > 0.0) == (ghi > 0.0)) {
        throw NumericalFailure("root solver: bracket does not contain a sign change");
    }
    const bool increasing = glo < 0.0;

    double x = 0.5 * (lo + hi);
    double step = std::abs(hi - lo);
    double step_prev = step;
    for (int it = 1; it <= opt.max_iter; ++it) {
        auto [gx, dx] = g(x);
        if (!std::isfinite(gx)) {
            throw NumericalFailure("root solver: non-finite function value");
        }
        if (std::abs(gx) <= opt.value_tol || gx == 0.0) return {x, gx, it};

        if ((gx < 0.0) == increasing) {
            lo = x;
        } else {
            hi = x;
        }
        const double tol = opt.abs_tol + opt.rel_tol * std::abs(x);
        if (std::abs(hi - lo) <= tol) return {x, gx, it};

        double next = 0.5 * (lo + hi);
        if (dx != 0.0 && std::isfinite(dx)) {
            const double candidate = x - gx / dx;
            const double a = std::min(lo, hi);
            const double b = std::max(lo, hi);
            if (candidate > a && candidate < b && std::abs(gx / dx) < 0.5 * step_prev) {
                next = candidate;
            }
        }
        step_prev = step;
        step = std::abs(next - x);
        if (step <= tol) return {next, gx, it};
        x = next;
    }
    throw NumericalFailure("root solver: iteration budget exhausted");
}

}  // namespace wbh::detail
