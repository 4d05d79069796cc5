#pragma once

// Tail probabilities for the central and noncentral chi-squared laws and the
// central F law, plus their inverses.
//
// Degrees of freedom may be any positive real. Every function here is pure and
// safe to call concurrently.

namespace wbh::dist {

/// Smallest tail probability accepted by the inverse survival functions.
inline constexpr double kMinTailProbability = 1e-300;

/// Mass left out of the Poisson mixture in nc_chi2_sf.
inline constexpr double kPoissonTruncation = 1e-14;

// Central chi-squared with `n` degrees of freedom.
double chi2_sf(double x, double n);
double chi2_cdf(double x, double n);
double chi2_pdf(double x, double n);
double chi2_isf(double u, double n);

/// Pr[chi'^2_n(lambda) >= x], evaluated as the Poisson(lambda/2) mixture of
/// central survivals chi2_sf(x, n + 2j). Summation starts at the modal index
/// and grows outward until the accumulated Poisson mass reaches
/// 1 - kPoissonTruncation. lambda == 0 returns chi2_sf(x, n) exactly.
double nc_chi2_sf(double x, double n, double lambda);

// Central F with (m, n) degrees of freedom.
double f_sf(double x, double m, double n);
double f_cdf(double x, double m, double n);
double f_pdf(double x, double m, double n);
/// Returns +infinity when the quantile exceeds the double range (tiny u with
/// very small denominator dof).
double f_isf(double u, double m, double n);

/// nc_chi2_sf(chi2_isf(u, n), n, lambda) / u. Nonincreasing in u.
double noncentral_exceedance_ratio(double u, double n, double lambda);

/// Pr(chi2_{m+h} >= t chi2_n / n) / u with t chosen so Pr(chi2_m >= t chi2_n / n) = u.
/// Equals f_sf(m t / (m + h), m + h, n) / u for t = f_isf(u, m, n). Nonincreasing in u.
double f_dof_shift_ratio(double u, double m, double n, double h);

/// chi2_sf(theta * w, n) / chi2_sf(theta * w_prime, n). Nondecreasing in
/// theta when w < w_prime; identically 1 when w == w_prime.
double chi2_scale_ratio(double theta, double w, double w_prime, double n);

struct ChiSquareLaw {
    double dof;

    double sf(double x) const { return chi2_sf(x, dof); }
    double cdf(double x) const { return chi2_cdf(x, dof); }
    double pdf(double x) const { return chi2_pdf(x, dof); }
    double isf(double u) const { return chi2_isf(u, dof); }
};

struct NoncentralChiSquareLaw {
    double dof;
    double noncentrality;

    double sf(double x) const { return nc_chi2_sf(x, dof, noncentrality); }
};

struct FLaw {
    double num_dof;
    double den_dof;

    double sf(double x) const { return f_sf(x, num_dof, den_dof); }
    double cdf(double x) const { return f_cdf(x, num_dof, den_dof); }
    double pdf(double x) const { return f_pdf(x, num_dof, den_dof); }
    double isf(double u) const { return f_isf(u, num_dof, den_dof); }
};

}  // namespace wbh::dist
