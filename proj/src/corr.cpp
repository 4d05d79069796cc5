#include "wbh/corr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "wbh/error.hpp"

namespace wbh {

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
    const Eigen::Index d = a.rows();
    if (a.cols() != d) throw InvalidInput("cholesky_lower: matrix must be square");
    const double max_diag = d > 0 ? a.diagonal().maxCoeff() : 0.0;
    const double threshold = kPivotThreshold * std::max(max_diag, 0.0);

    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
        if (!(pivot > threshold)) {
            throw DecompositionFailure(static_cast<std::size_t>(j), pivot);
        }
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < d; ++i) {
            l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
        }
    }
    return l;
}

CorrelationModel::CorrelationModel(const Eigen::MatrixXd& sigma) {
    const Eigen::Index d = sigma.rows();
    if (d == 0 || sigma.cols() != d) {
        throw InvalidInput("covariance matrix must be square and non-empty, got " +
                           std::to_string(sigma.rows()) + "x" + std::to_string(sigma.cols()));
    }
    if (!sigma.allFinite()) throw InvalidInput("covariance matrix has non-finite entries");

    const double magnitude = sigma.cwiseAbs().maxCoeff();
    const double asymmetry = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
    if (asymmetry > kSymmetryTolerance * magnitude) {
        throw InvalidInput("covariance matrix is not symmetric (max |s_ij - s_ji| = " +
                           std::to_string(asymmetry) + ")");
    }
    sigma_ = 0.5 * (sigma + sigma.transpose());

    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(sigma_(i, i) > 0.0)) {
            throw DecompositionFailure(static_cast<std::size_t>(i), sigma_(i, i));
        }
    }
    scale_ = sigma_.diagonal().cwiseSqrt();
    const Eigen::VectorXd inv_scale = scale_.cwiseInverse();
    corr_ = inv_scale.asDiagonal() * sigma_ * inv_scale.asDiagonal();
    corr_ = 0.5 * (corr_ + corr_.transpose()).eval();
    corr_.diagonal().setOnes();

    chol_ = cholesky_lower(corr_);

    // corr^{-1} = L^{-T} L^{-1}; its diagonal is the squared column norms of L^{-1}.
    const Eigen::MatrixXd chol_inv =
        chol_.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
    const Eigen::MatrixXd precision = chol_inv.transpose() * chol_inv;
    precision_diag_ = chol_inv.colwise().squaredNorm().transpose();

    weights_ = precision_diag_.cwiseInverse().cwiseMin(1.0);

    const Eigen::VectorXd root_w = weights_.cwiseSqrt();
    gamma_ = root_w.asDiagonal() * precision * root_w.asDiagonal();
    gamma_ = 0.5 * (gamma_ + gamma_.transpose()).eval();
}

Eigen::MatrixXd equicorrelated_matrix(std::size_t d, double rho) {
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, rho);
    m.diagonal().setOnes();
    return m;
}

bool equicorrelated_feasible(std::size_t d, double rho) noexcept {
    if (d < 1 || !(rho < 1.0)) return false;
    if (d == 1) return true;
    return rho > -1.0 / static_cast<double>(d - 1);
}

double equicorrelated_weight(std::size_t d, double rho) {
    if (d < 2) throw InvalidParameter("equicorrelated_weight: dimension must be at least 2");
    if (!equicorrelated_feasible(d, rho)) {
        throw InvalidParameter("equicorrelated_weight: rho = " + std::to_string(rho) +
                               " is outside (-1/(d-1), 1) for d = " + std::to_string(d));
    }
    const double dd = static_cast<double>(d);
    return (1.0 - rho) * (1.0 + (dd - 1.0) * rho) / (1.0 + (dd - 2.0) * rho);
}

Eigen::MatrixXd random_correlation_matrix(std::size_t d, Rng& rng, double eig_min, double eig_max) {
    const auto n = static_cast<Eigen::Index>(d);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Sign fix makes Q Haar-distributed.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }

    std::uniform_real_distribution<double> unif(std::log(eig_min), std::log(eig_max));
    Eigen::VectorXd eig(n);
    for (Eigen::Index i = 0; i < n; ++i) eig(i) = std::exp(unif(rng));

    Eigen::MatrixXd s = q * eig.asDiagonal() * q.transpose();
    const Eigen::VectorXd inv_scale = s.diagonal().cwiseSqrt().cwiseInverse();
    s = inv_scale.asDiagonal() * s * inv_scale.asDiagonal();
    s = 0.5 * (s + s.transpose()).eval();
    s.diagonal().setOnes();
    return s;
}

Eigen::VectorXd standardized_mean(const CorrelationModel& model, const MeanSpec& mean) {
    if (static_cast<std::size_t>(mean.mu.size()) != model.dimension()) {
        throw InvalidInput("mean vector length does not match covariance dimension");
    }
    return mean.mu.cwiseQuotient(model.scale());
}

Eigen::VectorXd weighted_mean(const CorrelationModel& model, const MeanSpec& mean) {
    return standardized_mean(model, mean).cwiseQuotient(model.weights().cwiseSqrt());
}

double conditional_noncentrality(const CorrelationModel& model, std::size_t i,
                                 std::span<const double> y_rest, std::span<const double> delta_rest) {
    const std::size_t d = model.dimension();
    if (i >= d) throw InvalidInput("conditional_noncentrality: index out of range");
    if (y_rest.size() != d - 1 || delta_rest.size() != d - 1) {
        throw InvalidInput("conditional_noncentrality: rest vectors must have length d - 1");
    }
    const Eigen::MatrixXd& gamma = model.gamma();
    const auto col = static_cast<Eigen::Index>(i);
    double dot = 0.0;
    std::size_t k = 0;
    for (std::size_t j = 0; j < d; ++j) {
        if (j == i) continue;
        dot += gamma(static_cast<Eigen::Index>(j), col) * (y_rest[k] - delta_rest[k]);
        ++k;
    }
    return dot * dot;
}

void sample_standardized(const Eigen::MatrixXd& chol, const Eigen::VectorXd& nu, Rng& rng,
                         Eigen::VectorXd& scratch, Eigen::VectorXd& out) {
    std::normal_distribution<double> normal;
    const Eigen::Index d = chol.rows();
    scratch.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) scratch(i) = normal(rng);
    out.noalias() = chol.triangularView<Eigen::Lower>() * scratch;
    out += nu;
}

Eigen::VectorXd sample_mvn(const CorrelationModel& model, const MeanSpec& mean, Rng& rng) {
    const Eigen::VectorXd nu = standardized_mean(model, mean);
    Eigen::VectorXd scratch;
    Eigen::VectorXd out;
    sample_standardized(model.chol(), nu, rng, scratch, out);
    return out;
}

}  // namespace wbh
