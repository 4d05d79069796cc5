#pragma once

// Variable selection in the Gaussian linear model Y = X beta + eps by the
// weighted step-up test on per-coefficient t^2 statistics.
//
// The model has no intercept; include a column of ones in X if one is wanted.

#include <Eigen/Dense>

#include <vector>

#include "wbh/procedure.hpp"

namespace wbh {

/// tau2_hat below this multiple of mean(Y^2) marks a noiseless (degenerate) fit.
inline constexpr double kDegenerateResidualRatio = 1e-14;

struct RegressionProblem {
    Eigen::MatrixXd design;    // n x d, rank d
    Eigen::VectorXd response;  // length n
};

struct OLSFit {
    Eigen::VectorXd beta_hat;
    double tau2_hat = 0.0;
    Eigen::MatrixXd gram;      // A = X^T X
    Eigen::MatrixXd gram_inv;  // A^{-1}
    int dof = 0;               // n - d
    bool degenerate = false;   // tau2_hat below kDegenerateResidualRatio * mean(Y^2)
};

/// Factorization of a fixed design, reusable across responses.
///
/// Holds the Cholesky factor of A = X^T X, the diagonal of A^{-1}, the
/// selection weights 1 / (a_ii a^ii) and the calibrated t-method with
/// n - d degrees of freedom (calibrated lazily per alpha).
class DesignFactor {
public:
    /// Throws InvalidInput when n <= d or X is rank deficient.
    explicit DesignFactor(Eigen::MatrixXd design);

    Eigen::Index rows() const noexcept { return design_.rows(); }
    Eigen::Index cols() const noexcept { return design_.cols(); }
    int dof() const noexcept { return static_cast<int>(design_.rows() - design_.cols()); }

    const Eigen::MatrixXd& design() const noexcept { return design_; }
    const Eigen::MatrixXd& gram() const noexcept { return gram_; }
    const Eigen::MatrixXd& gram_inv() const noexcept { return gram_inv_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }

    OLSFit fit(const Eigen::VectorXd& response) const;

private:
    Eigen::MatrixXd design_;
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd chol_;
    Eigen::MatrixXd gram_inv_;
    Eigen::VectorXd weights_;
};

OLSFit ols_fit(const RegressionProblem& problem);

/// T_i^2 = beta_i^2 / (a^ii tau2_hat). Throws DegenerateFit on a noiseless fit.
std::vector<double> t_squared(const OLSFit& fit);

/// w_i = 1 / (a_ii a^ii), the 1 - R_i^2 of coefficient i among the OLS estimates.
std::vector<double> selection_weights(const OLSFit& fit);

struct SelectionReport {
    OLSFit fit;
    std::vector<double> t_squared;
    std::vector<double> weights;
    std::vector<double> pvalues;      // f_sf(T_i^2, 1, n - d)
    std::vector<double> transformed;  // f_sf(T_i^2 / w_i, 1, n - d)
    CalibratedMethod method;
    StepUpOutcome outcome;
};

/// Selector for a fixed design at a fixed level: calibration happens once in
/// the constructor, so repeated select() calls only refit.
class VariableSelector {
public:
    VariableSelector(Eigen::MatrixXd design, double alpha);

    const DesignFactor& factor() const noexcept { return factor_; }
    const CalibratedMethod& method() const noexcept { return method_; }

    SelectionReport select(const Eigen::VectorXd& response) const;

private:
    DesignFactor factor_;
    CalibratedMethod method_;
};

SelectionReport select_variables_report(const RegressionProblem& problem, double alpha);

inline StepUpOutcome select_variables(const RegressionProblem& problem, double alpha) {
    return select_variables_report(problem, alpha).outcome;
}

}  // namespace wbh
