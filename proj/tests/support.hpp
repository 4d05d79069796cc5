#pragma once

// Reference implementations used as independent oracles.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace wbh::testing {

// Textbook BH: largest k with p_(k) <= k q / d, reject the k smallest.
inline std::vector<std::size_t> textbook_bh(const std::vector<double>& p, double q) {
    const std::size_t d = p.size();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::size_t k = 0;
    for (std::size_t i = d; i > 0; --i) {
        if (p[order[i - 1]] <= static_cast<double>(i) * q / static_cast<double>(d)) {
            k = i;
            break;
        }
    }
    std::vector<std::size_t> out;
    if (k > 0) {
        const double cut = p[order[k - 1]];
        for (std::size_t i = 0; i < d; ++i)
            if (p[i] <= cut) out.push_back(i);
    }
    return out;
}

// 1 - R_i^2 by least squares of column i on the others, using covariances.
inline double one_minus_r2(const Eigen::MatrixXd& corr, Eigen::Index i) {
    const Eigen::Index d = corr.rows();
    Eigen::MatrixXd s(d - 1, d - 1);
    Eigen::VectorXd c(d - 1);
    for (Eigen::Index a = 0, ra = 0; a < d; ++a) {
        if (a == i) continue;
        c(ra) = corr(a, i);
        for (Eigen::Index b = 0, rb = 0; b < d; ++b) {
            if (b == i) continue;
            s(ra, rb++) = corr(a, b);
        }
        ++ra;
    }
    const Eigen::VectorXd coef = s.colPivHouseholderQr().solve(c);
    return 1.0 - c.dot(coef) / corr(i, i);
}

inline Eigen::MatrixXd to_corr(const Eigen::MatrixXd& s) {
    const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
    return d.asDiagonal() * s * d.asDiagonal();
}

}  // namespace wbh::testing
