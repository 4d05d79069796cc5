#include "wbh/dist.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "wbh/detail/root.hpp"
#include "wbh/error.hpp"

namespace wbh::dist {
namespace {

namespace bm = boost::math;

using Policy = bm::policies::policy<bm::policies::promote_double<false>,
                                    bm::policies::overflow_error<bm::policies::errno_on_error>,
                                    bm::policies::underflow_error<bm::policies::ignore_error>>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dof(double dof, const char* what) {
    if (!(dof > 0.0) || !std::isfinite(dof)) {
        throw InvalidParameter(std::string(what) + ": degrees of freedom must be positive, got " +
                               std::to_string(dof));
    }
}

void require_x(double x, const char* what) {
    if (!(x >= 0.0)) {
        throw InvalidParameter(std::string(what) + ": argument must be nonnegative, got " +
                               std::to_string(x));
    }
}

void require_tail(double u, const char* what) {
    if (!(u > 0.0 && u < 1.0)) {
        throw InvalidParameter(std::string(what) + ": tail probability must lie in (0, 1), got " +
                               std::to_string(u));
    }
    if (u < kMinTailProbability) {
        throw InvalidParameter(std::string(what) + ": tail probability below 1e-300 is not supported");
    }
}

// log that stays finite where the tail underflows to zero; the value still
// lies below log(1e-300), so the sign seen by the root solver is right.
double floored_log(double v) {
    constexpr double kLogFloor = -745.0;
    return v > 0.0 ? std::max(std::log(v), kLogFloor) : kLogFloor - 1.0;
}

// 1 - I_z(a, b). ibetac drifts in absolute terms for tiny z and half-integer
// shapes, so the complement of the small lower tail is used when it is exact.
double beta_upper(double a, double b, double z) {
    const double lower = bm::ibeta(a, b, z, Policy());
    return lower < 0.5 ? 1.0 - lower : bm::ibetac(a, b, z, Policy());
}

// Generic inverse of a continuous decreasing survival function on [0, inf).
// The equation is solved on the log scale of whichever tail is smaller, so
// the round trip holds in relative terms at both ends of (0, 1).
template <class Sf, class Cdf, class Pdf>
double invert_survival(double u, double start, Sf sf, Cdf cdf, Pdf pdf) {
    // Bracket [lo, hi] with sf(lo) >= u >= sf(hi), judged on the smaller tail;
    // near u = 1 the sf rounds to 1 long before the cdf loses precision.
    const double q = 1.0 - u;
    auto past_root = [&](double x) { return u <= 0.5 ? sf(x) <= u : cdf(x) >= q; };
    double lo = 0.0;
    double hi = start;
    if (!past_root(hi)) {
        lo = hi;
        while (!past_root(hi)) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) return kInf;
        }
    } else {
        double probe = hi / 16.0;
        while (probe > 1e-300 && past_root(probe)) {
            hi = probe;
            probe /= 16.0;
        }
        lo = probe > 1e-300 ? probe : 0.0;
    }

    detail::RootOptions opt;
    opt.rel_tol = 1e-15;
    opt.max_iter = 200;

    if (u <= 0.5) {
        const double target = std::log(u);
        auto g = [&](double x) {
            const double s = sf(x);
            return std::pair{floored_log(s) - target, -pdf(x) / s};
        };
        return detail::solve_bracketed(g, lo, hi, opt).x;
    }
    const double target = std::log1p(-u);
    auto g = [&](double x) {
        const double c = cdf(x);
        return std::pair{floored_log(c) - target, pdf(x) / c};
    };
    return detail::solve_bracketed(g, lo, hi, opt).x;
}

}  // namespace

double chi2_sf(double x, double n) {
    require_dof(n, "chi2_sf");
    require_x(x, "chi2_sf");
    if (x == 0.0) return 1.0;
    if (x == kInf) return 0.0;
    if (n == 1.0) return std::erfc(std::sqrt(0.5 * x));
    return bm::gamma_q(0.5 * n, 0.5 * x, Policy());
}

double chi2_cdf(double x, double n) {
    require_dof(n, "chi2_cdf");
    require_x(x, "chi2_cdf");
    if (x == 0.0) return 0.0;
    if (x == kInf) return 1.0;
    if (n == 1.0) return std::erf(std::sqrt(0.5 * x));
    return bm::gamma_p(0.5 * n, 0.5 * x, Policy());
}

double chi2_pdf(double x, double n) {
    require_dof(n, "chi2_pdf");
    require_x(x, "chi2_pdf");
    if (x == kInf) return 0.0;
    if (x == 0.0) return n < 2.0 ? kInf : (n == 2.0 ? 0.5 : 0.0);
    if (n == 1.0) return std::exp(-0.5 * x) / std::sqrt(2.0 * std::numbers::pi * x);
    return 0.5 * bm::gamma_p_derivative(0.5 * n, 0.5 * x, Policy());
}

double chi2_isf(double u, double n) {
    require_dof(n, "chi2_isf");
    require_tail(u, "chi2_isf");
    return invert_survival(
        u, std::max(n, 1.0), [n](double x) { return chi2_sf(x, n); },
        [n](double x) { return chi2_cdf(x, n); }, [n](double x) { return chi2_pdf(x, n); });
}

double nc_chi2_sf(double x, double n, double lambda) {
    require_dof(n, "nc_chi2_sf");
    require_x(x, "nc_chi2_sf");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidParameter("nc_chi2_sf: noncentrality must be nonnegative and finite");
    }
    if (lambda == 0.0) return chi2_sf(x, n);
    if (x == 0.0) return 1.0;

    const double mean = 0.5 * lambda;
    const double mode = std::floor(mean);
    const double log_mode_weight = -mean + mode * std::log(mean) - std::lgamma(mode + 1.0);
    const double mode_weight = std::exp(log_mode_weight);

    double sum = mode_weight * chi2_sf(x, n + 2.0 * mode);
    double mass = mode_weight;

    double up_j = mode + 1.0;
    double up_weight = mode_weight * mean / up_j;
    double down_j = mode - 1.0;
    double down_weight = mode > 0.0 ? mode_weight * mode / mean : 0.0;

    // Past the mass target, keep going until the frontier terms no longer
    // move the sum; the extra terms are few and make the result smooth in lambda.
    constexpr double kTarget = 1.0 - kPoissonTruncation;
    constexpr double kNegligible = 0.25 * std::numeric_limits<double>::epsilon();
    auto frontier = [&] { return std::max(up_weight, down_j >= 0.0 ? down_weight : 0.0); };
    for (int guard = 0; (mass < kTarget || frontier() > kNegligible * mass) && guard < 10'000'000; ++guard) {
        const bool take_down = down_j >= 0.0 && down_weight >= up_weight;
        if (take_down) {
            sum += down_weight * chi2_sf(x, n + 2.0 * down_j);
            mass += down_weight;
            down_weight *= down_j / mean;
            down_j -= 1.0;
        } else {
            if (up_weight < std::numeric_limits<double>::min()) break;
            sum += up_weight * chi2_sf(x, n + 2.0 * up_j);
            mass += up_weight;
            up_j += 1.0;
            up_weight *= mean / up_j;
        }
    }
    // Dividing by the accumulated mass cancels the rounding shared by every
    // weight through mode_weight.
    return std::min(sum / mass, 1.0);
}

double f_sf(double x, double m, double n) {
    require_dof(m, "f_sf");
    require_dof(n, "f_sf");
    require_x(x, "f_sf");
    if (x == 0.0) return 1.0;
    if (x == kInf) return 0.0;
    // Pass whichever of mx/(mx+n) and n/(mx+n) is smaller; forming the other
    // as 1 - it loses the digits that matter near the corresponding end.
    const double denom = m * x + n;
    if (m * x < n) return beta_upper(0.5 * m, 0.5 * n, m * x / denom);
    return bm::ibeta(0.5 * n, 0.5 * m, n / denom, Policy());
}

double f_cdf(double x, double m, double n) {
    require_dof(m, "f_cdf");
    require_dof(n, "f_cdf");
    require_x(x, "f_cdf");
    if (x == 0.0) return 0.0;
    if (x == kInf) return 1.0;
    const double denom = m * x + n;
    if (m * x < n) return bm::ibeta(0.5 * m, 0.5 * n, m * x / denom, Policy());
    return beta_upper(0.5 * n, 0.5 * m, n / denom);
}

double f_pdf(double x, double m, double n) {
    require_dof(m, "f_pdf");
    require_dof(n, "f_pdf");
    require_x(x, "f_pdf");
    if (x == kInf) return 0.0;
    if (x == 0.0) return m < 2.0 ? kInf : (m == 2.0 ? 1.0 : 0.0);
    const double denom = m * x + n;
    return bm::ibeta_derivative(0.5 * m, 0.5 * n, m * x / denom, Policy()) * m * n / (denom * denom);
}

double f_isf(double u, double m, double n) {
    require_dof(m, "f_isf");
    require_dof(n, "f_isf");
    require_tail(u, "f_isf");
    return invert_survival(
        u, 1.0, [m, n](double x) { return f_sf(x, m, n); },
        [m, n](double x) { return f_cdf(x, m, n); }, [m, n](double x) { return f_pdf(x, m, n); });
}

double noncentral_exceedance_ratio(double u, double n, double lambda) {
    return nc_chi2_sf(chi2_isf(u, n), n, lambda) / u;
}

double f_dof_shift_ratio(double u, double m, double n, double h) {
    require_dof(h, "f_dof_shift_ratio");
    // Both laws are chi^2_k / (chi^2_n / n) without the 1/k numerator scaling,
    // i.e. k * F(k, n); they coincide with F for k = 1.
    const double t = m * f_isf(u, m, n);
    return f_sf(t / (m + h), m + h, n) / u;
}

double chi2_scale_ratio(double theta, double w, double w_prime, double n) {
    if (!(theta > 0.0) || !(w > 0.0) || !(w_prime > 0.0)) {
        throw InvalidParameter("chi2_scale_ratio: theta, w and w_prime must be positive");
    }
    if (w == w_prime) return 1.0;
    return chi2_sf(theta * w, n) / chi2_sf(theta * w_prime, n);
}

}  // namespace wbh::dist
