#include "wbh/procedure.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "wbh/corr.hpp"
#include "wbh/detail/root.hpp"
#include "wbh/dist.hpp"
#include "wbh/error.hpp"

namespace wbh {
namespace {

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidParameter("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

void require_weight(double w) {
    if (!(w > 0.0 && w <= 1.0)) {
        throw InvalidParameter("weights must lie in (0, 1], got " + std::to_string(w));
    }
}

// Indices sorted by (value, index).
std::vector<std::size_t> ascending_order(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    return order;
}

WeightedTestReport finish_report(CalibratedMethod method, std::vector<double> stats,
                                 std::vector<double> pvalues) {
    WeightedTestReport report;
    report.transformed.resize(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
        report.transformed[i] = method.kind.sf(stats[i]);
    }
    report.outcome = bh_stepup(report.transformed, method.alpha1);
    report.method = std::move(method);
    report.statistics = std::move(stats);
    report.pvalues = std::move(pvalues);
    return report;
}

}  // namespace

MethodKind MethodKind::t(double m) {
    if (!(m > 0.0) || !std::isfinite(m)) {
        throw InvalidParameter("t method needs positive degrees of freedom, got " + std::to_string(m));
    }
    return {TestKind::t, m};
}

double MethodKind::sf(double x) const {
    return kind == TestKind::z ? dist::chi2_sf(x, 1.0) : dist::f_sf(x, 1.0, m);
}

double MethodKind::isf(double u) const {
    return kind == TestKind::z ? dist::chi2_isf(u, 1.0) : dist::f_isf(u, 1.0, m);
}

double MethodKind::pdf(double x) const {
    return kind == TestKind::z ? dist::chi2_pdf(x, 1.0) : dist::f_pdf(x, 1.0, m);
}

std::string MethodKind::name() const {
    if (kind == TestKind::z) return "z";
    char buf[64];
    return "t(" + std::string(buf, std::to_chars(buf, buf + sizeof buf, m).ptr) + ")";
}

std::vector<double> CalibratedMethod::critical_constants() const {
    std::vector<double> c(weights.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = static_cast<double>(i + 1) * alpha1;
    return c;
}

double calibration_sum(std::span<const double> weights, double a, MethodKind kind) {
    const double x = kind.isf(a);
    double sum = 0.0;
    for (double w : weights) sum += (w == 1.0) ? a : kind.sf(w * x);
    return sum;
}

CalibratedMethod calibrate(std::span<const double> weights, double alpha, MethodKind kind) {
    require_alpha(alpha);
    if (weights.empty()) throw InvalidInput("calibrate: no weights");
    for (double w : weights) require_weight(w);

    CalibratedMethod out;
    out.kind = kind;
    out.weights.assign(weights.begin(), weights.end());
    out.alpha = alpha;

    const double d = static_cast<double>(weights.size());
    const double upper = alpha / d;
    if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 1.0; })) {
        out.alpha1 = upper;
        out.residual = d * upper - alpha;
        return out;
    }

    // Solve on t = log(a); g(t) = f(e^t) - alpha with
    // f'(a) = sum_i w_i pdf(w_i x) / pdf(x), x = isf(a).
    auto g = [&](double t) {
        const double a = std::exp(t);
        const double x = kind.isf(a);
        const double px = kind.pdf(x);
        double sum = 0.0;
        double slope = 0.0;
        for (double w : weights) {
            if (w == 1.0) {
                sum += a;
                slope += 1.0;
            } else {
                sum += kind.sf(w * x);
                slope += w * kind.pdf(w * x) / px;
            }
        }
        return std::pair{sum - alpha, slope * a};
    };

    const double t_hi = std::log(upper);
    double t_lo = t_hi;
    const double t_floor = std::log(dist::kMinTailProbability);
    do {
        t_lo = std::max(t_lo - std::log(1e3), t_floor);
        if (g(t_lo).first < 0.0) break;
        if (t_lo == t_floor) {
            throw NumericalFailure("calibrate: no alpha1 above 1e-300 satisfies the calibration condition");
        }
    } while (true);

    detail::RootOptions opt;
    opt.rel_tol = 1e-15;
    opt.value_tol = 1e-14;
    opt.max_iter = 200;
    const auto root = detail::solve_bracketed(g, t_lo, t_hi, opt);

    out.alpha1 = std::min(std::exp(root.x), upper);
    out.iterations = root.iterations;
    out.residual = calibration_sum(weights, out.alpha1, kind) - alpha;
    if (!(std::abs(out.residual) <= kCalibrationTolerance)) {
        throw NumericalFailure("calibrate: residual " + std::to_string(out.residual) +
                               " exceeds tolerance");
    }
    return out;
}

double transform_pvalue(double p, double w, MethodKind kind) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidParameter("transform_pvalue: p must lie in [0, 1], got " + std::to_string(p));
    }
    require_weight(w);
    if (w == 1.0) return p;
    const double clamped = std::clamp(p, kPValueFloor, kPValueCeiling);
    return kind.sf(kind.isf(clamped) / w);
}

StepUpOutcome stepup(std::span<const double> pvalues, std::span<const double> constants) {
    const std::size_t d = pvalues.size();
    if (constants.size() != d) {
        throw InvalidInput("stepup: " + std::to_string(d) + " p-values but " +
                           std::to_string(constants.size()) + " critical constants");
    }
    for (double p : pvalues) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("stepup: p-values must lie in [0, 1]");
    }
    for (std::size_t i = 1; i < d; ++i) {
        if (constants[i] < constants[i - 1]) {
            throw InvalidInput("stepup: critical constants must be nondecreasing");
        }
    }

    const auto order = ascending_order(pvalues);
    std::size_t r = 0;
    for (std::size_t i = d; i > 0; --i) {
        if (pvalues[order[i - 1]] <= constants[i - 1]) {
            r = i;
            break;
        }
    }

    StepUpOutcome out;
    if (r == 0) return out;
    const double threshold = pvalues[order[r - 1]];
    out.threshold = threshold;
    for (std::size_t i = 0; i < d; ++i) {
        if (pvalues[i] <= threshold) out.rejected.push_back(i);
    }
    out.rejections = out.rejected.size();
    return out;
}

StepUpOutcome bh_stepup(std::span<const double> pvalues, double alpha1) {
    std::vector<double> constants(pvalues.size());
    for (std::size_t i = 0; i < constants.size(); ++i) {
        constants[i] = static_cast<double>(i + 1) * alpha1;
    }
    return stepup(pvalues, constants);
}

StepUpOutcome statistic_space_stepup(std::span<const double> stats, double alpha1, MethodKind kind) {
    const std::size_t d = stats.size();
    for (double s : stats) {
        if (!(s >= 0.0)) throw InvalidInput("statistic_space_stepup: statistics must be nonnegative");
    }
    if (!(alpha1 > 0.0)) throw InvalidParameter("statistic_space_stepup: alpha1 must be positive");

    const auto order = ascending_order(stats);
    std::size_t r = 0;  // 1-based position in ascending order; 0 = none
    for (std::size_t i = 1; i <= d; ++i) {
        const double level = static_cast<double>(d - i + 1) * alpha1;
        const double critical = level >= 1.0 ? 0.0 : kind.isf(std::max(level, dist::kMinTailProbability));
        if (stats[order[i - 1]] >= critical) {
            r = i;
            break;
        }
    }

    StepUpOutcome out;
    if (r == 0) return out;
    const double cut = stats[order[r - 1]];
    for (std::size_t i = 0; i < d; ++i) {
        if (stats[i] >= cut) out.rejected.push_back(i);
    }
    out.rejections = out.rejected.size();
    out.threshold = kind.sf(cut);
    return out;
}

bool simes_global(std::span<const double> transformed, double alpha1) {
    std::vector<double> sorted(transformed.begin(), transformed.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] <= static_cast<double>(i + 1) * alpha1) return true;
    }
    return false;
}

WeightedTestReport weighted_test_z(std::span<const double> x, const Eigen::MatrixXd& sigma, double alpha) {
    require_alpha(alpha);
    const CorrelationModel model(sigma);
    if (x.size() != model.dimension()) {
        throw InvalidInput("weighted_test_z: " + std::to_string(x.size()) +
                           " observations for a covariance of dimension " +
                           std::to_string(model.dimension()));
    }
    const auto& w = model.weights();
    const MethodKind kind = MethodKind::z();
    std::vector<double> stats(x.size());
    std::vector<double> pvalues(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double z = x[i] / model.scale()(k);
        const double z2 = z * z;
        pvalues[i] = kind.sf(z2);
        stats[i] = z2 / w(k);
    }
    auto method = calibrate(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), alpha, kind);
    return finish_report(std::move(method), std::move(stats), std::move(pvalues));
}

WeightedTestReport weighted_test_t(std::span<const double> x, double v, double m,
                                   const Eigen::MatrixXd& sigma, double alpha) {
    require_alpha(alpha);
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidInput("weighted_test_t: scale statistic v must be positive, got " + std::to_string(v));
    }
    const MethodKind kind = MethodKind::t(m);
    const CorrelationModel model(sigma);
    if (x.size() != model.dimension()) {
        throw InvalidInput("weighted_test_t: " + std::to_string(x.size()) +
                           " observations for a covariance of dimension " +
                           std::to_string(model.dimension()));
    }
    const auto& w = model.weights();
    std::vector<double> stats(x.size());
    std::vector<double> pvalues(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double z = x[i] / model.scale()(k);
        const double t2 = m * z * z / v;
        pvalues[i] = kind.sf(t2);
        stats[i] = t2 / w(k);
    }
    auto method = calibrate(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), alpha, kind);
    return finish_report(std::move(method), std::move(stats), std::move(pvalues));
}

}  // namespace wbh
