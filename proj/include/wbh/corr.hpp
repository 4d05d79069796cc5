#pragma once

// Covariance preprocessing for the weighted step-up tests: standardization,
// multiple-correlation weights, the precision-scaled matrix Gamma and a
// Cholesky factor for sampling.

#include <Eigen/Dense>

#include <cstddef>
#include <span>

#include "wbh/rng.hpp"

namespace wbh {

/// Relative tolerance for input symmetry, measured against max |sigma_ij|.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Cholesky pivots at or below this fraction of the largest diagonal entry
/// are treated as a positive-definiteness failure.
inline constexpr double kPivotThreshold = 1e-12;

/// Lower-triangular L with L L^T = a. Throws DecompositionFailure naming the
/// first pivot that falls at or below kPivotThreshold * max diag(a).
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a);

/// Immutable view of a positive-definite covariance matrix and everything the
/// weighted tests derive from it.
///
/// weights()[i] = 1 - R_i^2, where R_i^2 is the squared multiple correlation of
/// coordinate i on the others; equivalently the reciprocal of the i-th
/// diagonal of the inverse correlation matrix.
class CorrelationModel {
public:
    /// Validates, symmetrizes and factors `sigma`. Throws InvalidInput for
    /// non-square, non-finite or asymmetric input and DecompositionFailure if
    /// the matrix is not positive definite.
    explicit CorrelationModel(const Eigen::MatrixXd& sigma);

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(corr_.rows()); }

    const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
    const Eigen::MatrixXd& corr() const noexcept { return corr_; }
    /// sqrt(sigma_ii).
    const Eigen::VectorXd& scale() const noexcept { return scale_; }
    const Eigen::VectorXd& precision_diag() const noexcept { return precision_diag_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    /// diag(sqrt w) corr^{-1} diag(sqrt w); unit diagonal.
    const Eigen::MatrixXd& gamma() const noexcept { return gamma_; }
    /// Lower Cholesky factor of corr().
    const Eigen::MatrixXd& chol() const noexcept { return chol_; }

private:
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd corr_;
    Eigen::VectorXd scale_;
    Eigen::VectorXd precision_diag_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd gamma_;
    Eigen::MatrixXd chol_;
};

inline CorrelationModel build_model(const Eigen::MatrixXd& sigma) { return CorrelationModel(sigma); }

/// (1 - rho) I + rho 1 1^T.
Eigen::MatrixXd equicorrelated_matrix(std::size_t d, double rho);

/// True iff -1/(d-1) < rho < 1.
bool equicorrelated_feasible(std::size_t d, double rho) noexcept;

/// Common weight of the equicorrelated model,
/// (1 - rho)(1 + (d-1) rho) / (1 + (d-2) rho).
double equicorrelated_weight(std::size_t d, double rho);

/// Random correlation matrix: random orthogonal basis, log-uniform
/// eigenvalues in [eig_min, eig_max], rescaled to unit diagonal.
Eigen::MatrixXd random_correlation_matrix(std::size_t d, Rng& rng, double eig_min = 0.05,
                                          double eig_max = 5.0);

/// Mean vector mu on the original scale.
struct MeanSpec {
    Eigen::VectorXd mu;

    static MeanSpec zero(std::size_t d) { return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))}; }
};

/// nu_i = mu_i / sqrt(sigma_ii): the mean of the standardized vector Z.
Eigen::VectorXd standardized_mean(const CorrelationModel& model, const MeanSpec& mean);

/// delta_i = mu_i / sqrt(sigma_ii w_i): the mean of Y = diag(w^{-1/2}) Z.
Eigen::VectorXd weighted_mean(const CorrelationModel& model, const MeanSpec& mean);

/// (gamma_{-i,i}^T (y_rest - delta_rest))^2, the noncentrality of Y_i^2 given
/// the other weighted coordinates. `y_rest` and `delta_rest` omit entry i.
double conditional_noncentrality(const CorrelationModel& model, std::size_t i,
                                 std::span<const double> y_rest, std::span<const double> delta_rest);

/// One draw of Z ~ N_d(nu, corr).
Eigen::VectorXd sample_mvn(const CorrelationModel& model, const MeanSpec& mean, Rng& rng);

/// Allocation-free variant: writes nu + L e into `out` using `scratch` for e.
void sample_standardized(const Eigen::MatrixXd& chol, const Eigen::VectorXd& nu, Rng& rng,
                         Eigen::VectorXd& scratch, Eigen::VectorXd& out);

}  // namespace wbh
