#include "wbh/varselect.hpp"

#include <cmath>
#include <string>

#include "wbh/corr.hpp"
#include "wbh/error.hpp"

namespace wbh {

DesignFactor::DesignFactor(Eigen::MatrixXd design) : design_(std::move(design)) {
    const Eigen::Index n = design_.rows();
    const Eigen::Index d = design_.cols();
    if (d == 0) throw InvalidInput("design matrix has no columns");
    if (n <= d) {
        throw InvalidInput("design has n = " + std::to_string(n) + " rows and d = " + std::to_string(d) +
                           " columns; need n > d for a residual variance estimate");
    }
    if (!design_.allFinite()) throw InvalidInput("design matrix has non-finite entries");

    gram_ = design_.transpose() * design_;
    // Rank is judged on the unit-diagonal rescaling so column scale does not matter.
    try {
        for (Eigen::Index i = 0; i < d; ++i) {
            if (!(gram_(i, i) > 0.0)) throw DecompositionFailure(static_cast<std::size_t>(i), gram_(i, i));
        }
        const Eigen::VectorXd scale = gram_.diagonal().cwiseSqrt();
        const Eigen::VectorXd inv_scale = scale.cwiseInverse();
        const Eigen::MatrixXd unit = inv_scale.asDiagonal() * gram_ * inv_scale.asDiagonal();
        chol_ = scale.asDiagonal() * cholesky_lower(unit);
    } catch (const DecompositionFailure& e) {
        throw InvalidInput("design matrix is rank deficient (column " + std::to_string(e.pivot()) +
                           " is linearly dependent on earlier columns)");
    }
    const Eigen::MatrixXd chol_inv =
        chol_.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
    gram_inv_ = chol_inv.transpose() * chol_inv;
    gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();

    weights_.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        weights_(i) = std::min(1.0, 1.0 / (gram_(i, i) * gram_inv_(i, i)));
    }
}

OLSFit DesignFactor::fit(const Eigen::VectorXd& response) const {
    if (response.size() != design_.rows()) {
        throw InvalidInput("response has length " + std::to_string(response.size()) + " but design has " +
                           std::to_string(design_.rows()) + " rows");
    }
    if (!response.allFinite()) throw InvalidInput("response has non-finite entries");

    OLSFit fit;
    const Eigen::VectorXd xty = design_.transpose() * response;
    const auto lower = chol_.triangularView<Eigen::Lower>();
    fit.beta_hat = lower.transpose().solve(lower.solve(xty));
    const double rss = (response - design_ * fit.beta_hat).squaredNorm();
    fit.dof = dof();
    fit.tau2_hat = rss / fit.dof;
    fit.gram = gram_;
    fit.gram_inv = gram_inv_;
    const double mean_sq = response.squaredNorm() / static_cast<double>(response.size());
    fit.degenerate = !(fit.tau2_hat > kDegenerateResidualRatio * mean_sq);
    return fit;
}

OLSFit ols_fit(const RegressionProblem& problem) { return DesignFactor(problem.design).fit(problem.response); }

std::vector<double> t_squared(const OLSFit& fit) {
    if (fit.degenerate || !(fit.tau2_hat > 0.0)) {
        throw DegenerateFit("residual variance is zero; the response is an exact linear function of the design");
    }
    const Eigen::Index d = fit.beta_hat.size();
    std::vector<double> out(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        const double b = fit.beta_hat(i);
        out[static_cast<std::size_t>(i)] = b * b / (fit.gram_inv(i, i) * fit.tau2_hat);
    }
    return out;
}

std::vector<double> selection_weights(const OLSFit& fit) {
    const Eigen::Index d = fit.gram.rows();
    std::vector<double> w(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        w[static_cast<std::size_t>(i)] = std::min(1.0, 1.0 / (fit.gram(i, i) * fit.gram_inv(i, i)));
    }
    return w;
}

VariableSelector::VariableSelector(Eigen::MatrixXd design, double alpha)
    : factor_(std::move(design)),
      method_(calibrate(std::span<const double>(factor_.weights().data(),
                                                static_cast<std::size_t>(factor_.weights().size())),
                        alpha, MethodKind::t(static_cast<double>(factor_.dof())))) {}

SelectionReport VariableSelector::select(const Eigen::VectorXd& response) const {
    SelectionReport report;
    report.fit = factor_.fit(response);
    report.t_squared = t_squared(report.fit);
    report.weights.assign(factor_.weights().data(), factor_.weights().data() + factor_.weights().size());
    const MethodKind kind = method_.kind;
    const std::size_t d = report.t_squared.size();
    report.pvalues.resize(d);
    report.transformed.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        report.pvalues[i] = kind.sf(report.t_squared[i]);
        report.transformed[i] = kind.sf(report.t_squared[i] / report.weights[i]);
    }
    report.method = method_;
    report.outcome = bh_stepup(report.transformed, method_.alpha1);
    return report;
}

SelectionReport select_variables_report(const RegressionProblem& problem, double alpha) {
    return VariableSelector(problem.design, alpha).select(problem.response);
}

}  // namespace wbh
