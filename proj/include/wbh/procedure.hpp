#pragma once

// Weighted Benjamini-Hochberg step-up tests for two-sided z- and t-tests of
// correlated normal means.
//
// Each squared statistic is divided by its weight w_i = 1 - R_i^2 before being
// turned into a p-value, and the base level alpha1 is recalibrated so that
// sum_i sf(w_i * isf(alpha1)) = alpha. With unit weights everything reduces
// to the textbook procedure with alpha1 = alpha / d.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wbh {

enum class TestKind { z, t };

/// Null law of the squared statistic: chi^2_1 for z-tests, F(1, m) for
/// t-tests with m denominator degrees of freedom.
struct MethodKind {
    TestKind kind = TestKind::z;
    double m = 0.0;

    static MethodKind z() { return {TestKind::z, 0.0}; }
    /// Throws InvalidParameter unless m > 0.
    static MethodKind t(double m);

    double sf(double x) const;
    double isf(double u) const;
    double pdf(double x) const;

    /// "z" or "t(m)".
    std::string name() const;

    friend bool operator==(const MethodKind&, const MethodKind&) = default;
};

/// Lower clamp applied to p-values before they enter an inverse survival function.
inline constexpr double kPValueFloor = 1e-300;
/// Upper clamp, likewise.
inline constexpr double kPValueCeiling = 1.0 - 1e-16;

/// Required accuracy of the solved calibration condition.
inline constexpr double kCalibrationTolerance = 1e-10;

struct CalibratedMethod {
    MethodKind kind;
    std::vector<double> weights;
    double alpha = 0.0;
    double alpha1 = 0.0;
    /// sum_i sf(w_i isf(alpha1)) - alpha.
    double residual = 0.0;
    int iterations = 0;

    std::size_t dimension() const noexcept { return weights.size(); }
    /// i * alpha1 for i = 1..d.
    std::vector<double> critical_constants() const;
};

/// sum_i sf(w_i * isf(a)) under `kind`. Strictly increasing in a.
double calibration_sum(std::span<const double> weights, double a, MethodKind kind);

/// Solves calibration_sum(weights, alpha1, kind) = alpha for alpha1 in (0, alpha/d].
/// Unit weights short-circuit to alpha / d exactly.
CalibratedMethod calibrate(std::span<const double> weights, double alpha, MethodKind kind);

inline double calibrate_alpha1(std::span<const double> weights, double alpha, MethodKind kind) {
    return calibrate(weights, alpha, kind).alpha1;
}

/// sf(isf(p) / w). p is clamped to [kPValueFloor, kPValueCeiling] before the
/// inverse; w == 1 returns p unchanged.
double transform_pvalue(double p, double w, MethodKind kind);

struct StepUpOutcome {
    std::size_t rejections = 0;
    /// Ascending original indices.
    std::vector<std::size_t> rejected;
    /// R-th smallest p-value; empty when nothing is rejected.
    std::optional<double> threshold;
};

/// Step-up test: R = max{i : p_(i) <= c_i}; rejects every index with
/// p <= p_(R). Order statistics break ties by original index.
StepUpOutcome stepup(std::span<const double> pvalues, std::span<const double> constants);

/// stepup with constants i * alpha1.
StepUpOutcome bh_stepup(std::span<const double> pvalues, double alpha1);

/// The same test phrased on the weighted squared statistics: with the
/// statistics sorted ascending, R = min{i : T_(i) >= isf((d - i + 1) alpha1)}
/// and every statistic >= T_(R) is rejected. The reported threshold is
/// sf(T_(R)).
StepUpOutcome statistic_space_stepup(std::span<const double> stats, double alpha1, MethodKind kind);

/// Global null rejected iff min_i p_(i) / (i alpha1) <= 1.
bool simes_global(std::span<const double> transformed, double alpha1);

struct WeightedTestReport {
    CalibratedMethod method;
    /// Weighted squared statistics: Z_i^2 / w_i (z) or T_i^2 / w_i (t).
    std::vector<double> statistics;
    /// Unweighted two-sided p-values.
    std::vector<double> pvalues;
    /// sf(statistics[i]); equals transform_pvalue(pvalues[i], w_i) up to rounding.
    std::vector<double> transformed;
    StepUpOutcome outcome;
};

/// Weighted test for x ~ N(mu, sigma) with sigma known.
WeightedTestReport weighted_test_z(std::span<const double> x, const Eigen::MatrixXd& sigma, double alpha);

/// Weighted test for x ~ N(mu, tau^2 sigma) with v ~ tau^2 chi^2_m independent of x.
WeightedTestReport weighted_test_t(std::span<const double> x, double v, double m,
                                   const Eigen::MatrixXd& sigma, double alpha);

inline StepUpOutcome weighted_bh_z(std::span<const double> x, const Eigen::MatrixXd& sigma, double alpha) {
    return weighted_test_z(x, sigma, alpha).outcome;
}

inline StepUpOutcome weighted_bh_t(std::span<const double> x, double v, double m,
                                   const Eigen::MatrixXd& sigma, double alpha) {
    return weighted_test_t(x, v, m, sigma, alpha).outcome;
}

}  // namespace wbh
