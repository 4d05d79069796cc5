// Acceptance run: one PASS/FAIL line per criterion, detail lines indented.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "support.hpp"
#include "wbh/cli.hpp"
#include "wbh/corr.hpp"
#include "wbh/dist.hpp"
#include "wbh/procedure.hpp"
#include "wbh/rng.hpp"
#include "wbh/sim.hpp"
#include "wbh/varselect.hpp"

using namespace wbh;

namespace {

const std::vector<double> kRhos{-0.05, 0.0, 0.3, 0.7, 0.9};
constexpr std::size_t kGridReps = 100000;
constexpr std::uint64_t kSeed = 20261017;

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Criterion {
    int id;
    std::string title;
    bool pass = true;
    std::vector<std::string> details;

    void note(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
        char buf[512];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, ap);
        va_end(ap);
        details.emplace_back(buf);
    }
    void require(bool ok, const char* what) {
        if (!ok) {
            pass = false;
            details.push_back(std::string("FAILED: ") + what);
        }
    }
};

Scenario equi(std::size_t d, double rho, std::size_t n_null, MethodKind method, std::size_t reps,
              std::uint64_t seed) {
    Scenario s;
    s.dimension = d;
    s.covariance = CovarianceSpec::equicorrelated(rho);
    for (std::size_t i = 0; i < n_null; ++i) s.nulls.push_back(i);
    s.method = method;
    s.replications = reps;
    s.seed = seed;
    s.name = "d" + std::to_string(d) + "_" + s.covariance.describe() + "_null" + std::to_string(n_null) + "_" +
             method.name();
    return s;
}

void check_fdr(Criterion& c, const SimulationReport& r, double alpha) {
    const double bound = alpha + 3.0 * r.direct.std_error;
    const bool ok = r.valid && r.direct.mean_fdp <= bound;
    c.note("%-34s fdr=%.5f se=%.5f bound=%.5f loo=%.5f plain=%.5f power=%.3f fail=%zu %s",
           r.scenario.name.c_str(), r.direct.mean_fdp, r.direct.std_error, bound, r.leave_one_out.mean_fdp,
           r.plain_bh.mean_fdp, r.power, r.failures, ok ? "ok" : "EXCEEDS");
    c.require(ok, r.scenario.name.c_str());
}

// Mean-test grid shared by criteria 2, 3 and 5.
std::vector<SimulationReport> run_grid(MethodKind method, std::uint64_t seed) {
    std::vector<SimulationReport> out;
    std::uint64_t k = 0;
    for (double rho : kRhos) {
        for (std::size_t n_null : {std::size_t{20}, std::size_t{10}}) {
            out.push_back(simulate(equi(20, rho, n_null, method, kGridReps, mix64(seed + k++)), workers()));
        }
    }
    return out;
}

void identity_reduction(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> ones(10, 1.0);
    const double a1 = calibrate_alpha1(ones, 0.05, MethodKind::z());
    c.note("alpha1 = %.17g (|err| = %.3g)", a1, std::abs(a1 - 0.005));
    c.require(std::abs(a1 - 0.005) <= 1e-12, "alpha1 = alpha/d");

    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(10, 10);
    Rng rng = make_stream(kSeed, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z;
    std::size_t equal = 0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> x(10), p(10);
        const int signals = k % 6;
        for (int i = 0; i < 10; ++i) {
            x[i] = z(rng) + (i < signals ? 3.0 * u(rng) + 1.0 : 0.0);
            p[i] = dist::chi2_sf(x[i] * x[i], 1.0);
        }
        equal += weighted_bh_z(x, id, 0.05).rejected == testing::textbook_bh(p, 0.05);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.note("%zu/1000 rejection sets equal to textbook BH; %.3f s", equal, secs);
    c.require(equal == 1000, "rejection sets equal");
    c.require(secs < 1.0, "runtime < 1 s");
}

void variable_selection(Criterion& c) {
    std::uint64_t k = 0;
    for (double design_rho : {0.3, 0.6, 0.9}) {
        for (std::size_t n_null : {std::size_t{10}, std::size_t{8}}) {
            Scenario s;
            s.dimension = 10;
            s.regression = RegressionSpec{50, design_rho, 100 + k};
            for (std::size_t i = 0; i < n_null; ++i) s.nulls.push_back(i);
            s.replications = kGridReps;
            s.seed = mix64(kSeed + 300 + k++);
            s.name = "reg50x10_rho" + std::to_string(design_rho).substr(0, 3) + "_null" + std::to_string(n_null);
            check_fdr(c, simulate(s, workers()), 0.05);
        }
    }
    Rng rng = make_stream(kSeed, 4);
    std::uniform_real_distribution<double> u(-0.1, 0.95);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const CorrelationModel cols(equicorrelated_matrix(10, u(rng)));
        Eigen::MatrixXd x(50, 10);
        for (int r = 0; r < 50; ++r) x.row(r) = sample_mvn(cols, MeanSpec::zero(10), rng).transpose();
        const DesignFactor f(x);
        const Eigen::MatrixXd inv_corr = testing::to_corr(f.gram_inv());
        for (int i = 0; i < 10; ++i) {
            const double direct = 1.0 / (f.gram()(i, i) * f.gram_inv()(i, i));
            worst = std::max({worst, std::abs(f.weights()(i) - direct),
                              std::abs(f.weights()(i) - testing::one_minus_r2(inv_corr, i))});
        }
    }
    c.note("weight identity on 100 random designs: max |diff| = %.3g", worst);
    c.require(worst <= 1e-10, "weight identity");
}

void estimator_equivalence(Criterion& c, const std::vector<SimulationReport>& grid) {
    std::size_t draws = 0, mismatches = 0;
    std::uint64_t k = 0;
    for (std::size_t d = 1; d <= 6; ++d) {
        for (double rho : {-0.15, 0.3, 0.8}) {
            const std::size_t n_null = 1 + k % d;
            const ScenarioRunner runner(equi(d, rho, n_null, k % 2 ? MethodKind::t(10) : MethodKind::z(), 1000,
                                             mix64(kSeed + 500 + k)));
            ++k;
            for (std::size_t r = 0; r < 1000; ++r) {
                const ReplicationResult res = runner.run(r);
                ++draws;
                mismatches += res.failed || !(res.fdp == res.leave_one_out);
            }
        }
    }
    c.note("d <= 6: %zu draws, %zu exact mismatches", draws, mismatches);
    c.require(mismatches == 0, "per-realization equality");
    double worst = 0.0;
    for (const auto& r : grid) {
        const double se = std::hypot(r.direct.std_error, r.leave_one_out.std_error);
        const double gap = std::abs(r.direct.mean_fdp - r.leave_one_out.mean_fdp);
        worst = std::max(worst, se > 0 ? gap / se : (gap > 0 ? INFINITY : 0.0));
        c.require(gap <= 3.0 * se, r.scenario.name.c_str());
        c.require(r.estimator_mismatches == 0, "no per-draw mismatches at d = 20");
    }
    c.note("d = 20 grid: max |direct - loo| / combined SE = %.3g over %zu scenarios", worst, grid.size());
}

void monotonicity(Criterion& c) {
    std::size_t violations = 0, checks = 0;
    double worst = 0.0;
    for (double n : {1.0, 3.0}) {
        for (double lam : {0.5, 1.0, 5.0}) {
            double prev = INFINITY;
            for (int k = 1; k <= 99; ++k) {
                const double r = dist::noncentral_exceedance_ratio(k / 100.0, n, lam);
                worst = std::max(worst, r - prev);
                violations += r > prev + 1e-10;
                ++checks;
                prev = r;
            }
        }
    }
    for (double n : {5.0, 10.0, 50.0}) {
        for (double h : {2.0, 4.0}) {
            double prev = INFINITY;
            for (int k = 1; k <= 99; ++k) {
                const double r = dist::f_dof_shift_ratio(k / 100.0, 1.0, n, h);
                worst = std::max(worst, r - prev);
                violations += r > prev + 1e-10;
                ++checks;
                prev = r;
            }
        }
    }
    for (double n : {1.0, 3.0}) {
        for (auto [w, wp] : {std::pair{0.5, 1.0}, std::pair{1.0, 2.0}, std::pair{0.2, 0.8}}) {
            double prev = -INFINITY;
            for (int k = 1; k <= 99; ++k) {
                const double r = dist::chi2_scale_ratio(0.1 * k, w, wp, n);
                worst = std::max(worst, prev - r);
                violations += r < prev - 1e-10;
                ++checks;
                prev = r;
            }
        }
    }
    c.note("%zu grid steps, %zu violations, largest step against the required direction %.3g", checks,
           violations, worst);
    c.require(violations == 0, "monotone ratios");
}

void duality(Criterion& c) {
    Rng rng = make_stream(kSeed, 7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z;
    std::size_t equal = 0, total_rejections = 0;
    for (int k = 0; k < 10000; ++k) {
        const std::size_t d = 1 + k % 8;
        const Eigen::MatrixXd corr = d == 1 ? Eigen::MatrixXd::Ones(1, 1) : random_correlation_matrix(d, rng);
        std::vector<double> x(d);
        for (auto& v : x) v = z(rng) + (u(rng) < 0.4 ? 3.0 : 0.0);
        const double alpha = 0.01 + 0.2 * u(rng);
        const WeightedTestReport r = k % 2 ? weighted_test_z(x, corr, alpha)
                                           : weighted_test_t(x, 10.0 * (0.5 + u(rng)), 10.0, corr, alpha);
        const StepUpOutcome s = statistic_space_stepup(r.statistics, r.method.alpha1, r.method.kind);
        equal += s.rejected == r.outcome.rejected;
        total_rejections += r.outcome.rejections;
    }
    c.note("%zu/10000 identical rejection sets (%zu rejections in total)", equal, total_rejections);
    c.require(equal == 10000, "identical rejection sets");
}

void simes_global_null(Criterion& c) {
    for (double rho : kRhos) {
        const CorrelationModel m(equicorrelated_matrix(20, rho));
        const auto& w = m.weights();
        const double a1 = calibrate_alpha1(std::span<const double>(w.data(), 20), 0.05, MethodKind::z());
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(20);
        Eigen::VectorXd scratch, zv;
        std::size_t hits = 0;
        std::vector<double> p(20);
        for (std::size_t r = 0; r < kGridReps; ++r) {
            Rng rng = make_stream(mix64(kSeed + 800), r);
            sample_standardized(m.chol(), zero, rng, scratch, zv);
            for (int i = 0; i < 20; ++i) p[i] = dist::chi2_sf(zv(i) * zv(i) / w(i), 1.0);
            hits += simes_global(p, a1);
        }
        const double n = static_cast<double>(kGridReps);
        const double rate = static_cast<double>(hits) / n;
        const double se = std::sqrt(rate * (1.0 - rate) / (n - 1.0));
        const bool ok = rate <= 0.05 + 3.0 * se;
        c.note("rho=%-5g Pr(R >= 1) = %.5f se=%.5f bound=%.5f %s", rho, rate, se, 0.05 + 3.0 * se,
               ok ? "ok" : "EXCEEDS");
        c.require(ok, "Simes rejection rate");
    }
}

void kernels(Criterion& c) {
    double worst_rt = 0.0;
    for (double n : {0.5, 1.0, 2.0, 3.5, 10.0, 50.0}) {
        for (double e = -10.0; e <= -1e-10; e += 0.25) {
            for (double u : {std::pow(10.0, e), 1.0 - std::pow(10.0, e)}) {
                if (!(u > 1e-10 && u < 1.0 - 1e-10)) continue;
                worst_rt = std::max(worst_rt, std::abs(dist::chi2_sf(dist::chi2_isf(u, n), n) - u) / u);
                worst_rt = std::max(worst_rt, std::abs(dist::f_sf(dist::f_isf(u, 1.0, n), 1.0, n) - u) / u);
                worst_rt = std::max(worst_rt, std::abs(dist::f_sf(dist::f_isf(u, n, 7.0), n, 7.0) - u) / u);
            }
        }
    }
    c.note("round trip sf(isf(u)): max relative error %.3g", worst_rt);
    c.require(worst_rt <= 1e-12, "round trips");

    double worst_central = 0.0;
    for (double n : {1.0, 2.0, 5.0, 20.0})
        for (double x = 0.0; x <= 60.0; x += 0.37)
            worst_central = std::max(worst_central, std::abs(dist::nc_chi2_sf(x, n, 0.0) - dist::chi2_sf(x, n)));
    c.note("nc_chi2_sf(x, n, 0) vs chi2_sf: max |diff| %.3g", worst_central);
    c.require(worst_central <= 1e-13, "central reduction");

    struct Spot {
        double x, n, lam;
    };
    const Spot spots[] = {{2.0, 1.0, 3.0}, {3.841459, 1.0, 1.0}, {5.0, 3.0, 2.0}, {10.0, 2.0, 8.0}, {0.5, 4.0, 1.5}};
    std::uint64_t k = 0;
    for (const auto& s : spots) {
        Rng rng = make_stream(kSeed + 900, k++);
        std::normal_distribution<double> z;
        std::chi_squared_distribution<double> rest(s.n - 1.0);
        const double shift = std::sqrt(s.lam);
        const std::size_t draws = 10'000'000;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < draws; ++i) {
            const double y = z(rng) + shift;
            hits += y * y + (s.n > 1.0 ? rest(rng) : 0.0) >= s.x;
        }
        const double emp = static_cast<double>(hits) / static_cast<double>(draws);
        const double se = std::sqrt(emp * (1.0 - emp) / static_cast<double>(draws));
        const double exact = dist::nc_chi2_sf(s.x, s.n, s.lam);
        const bool ok = std::abs(emp - exact) <= 3.0 * se;
        c.note("nc_chi2_sf(%g, %g, %g) = %.7f, simulated %.7f (se %.2g, z %.2f) %s", s.x, s.n, s.lam, exact, emp,
               se, (emp - exact) / se, ok ? "ok" : "OFF");
        c.require(ok, "simulation spot point");
    }
}

void determinism(Criterion& c) {
    const std::string path = "/tmp/wbh_acceptance_scenarios.json";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs(R"({"schema_version": 1,
          "scenarios": [{"name": "reg", "dimension": 10, "regression": {"n": 50, "design_rho": 0.5},
                         "null_count": 8},
                        {"name": "rpd", "dimension": 12, "covariance": {"type": "random_pd", "seed": 3},
                         "null_count": 6, "method": {"kind": "t", "m": 10}}],
          "grid": {"dimensions": [20], "rhos": [-0.05, 0.7], "null_fractions": [1.0, 0.5]}})",
                   f);
        std::fclose(f);
    }
    for (const std::string format : {"tsv", "json"}) {
        std::vector<std::string> outputs;
        for (const std::string w : {"1", "8", "3"}) {
            std::ostringstream out, err;
            const int code = cli::main({"wbh", "simulate", "--scenario", path, "--reps", "10000", "--seed", "42",
                                        "--workers", w, "--format", format},
                                       out, err);
            c.require(code == 0, "simulate exit code");
            outputs.push_back(out.str());
        }
        const bool same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
        c.note("%s output, workers 1/8/3: %zu bytes, %s", format.c_str(), outputs[0].size(),
               same ? "byte-identical" : "DIFFERENT");
        c.require(same, "byte-identical output");
    }
}

}  // namespace

int main() {
    std::vector<Criterion> results;
    auto run = [&](int id, std::string title, const std::function<void(Criterion&)>& body) {
        Criterion c{id, std::move(title)};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body(c);
        } catch (const std::exception& e) {
            c.pass = false;
            c.details.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %2d %s (%.1f s)\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), secs);
        for (const auto& d : c.details) std::printf("       %s\n", d.c_str());
        std::fflush(stdout);
        results.push_back(std::move(c));
    };

    std::vector<SimulationReport> z_grid;
    run(1, "identity covariance reduces to textbook BH", identity_reduction);
    run(2, "FDR control, z-tests, equicorrelated grid", [&](Criterion& c) {
        z_grid = run_grid(MethodKind::z(), kSeed + 100);
        for (const auto& r : z_grid) check_fdr(c, r, 0.05);
    });
    run(3, "FDR control, t-tests with m = 10", [&](Criterion& c) {
        for (const auto& r : run_grid(MethodKind::t(10), kSeed + 200)) check_fdr(c, r, 0.05);
    });
    run(4, "FDR control of variable selection, n = 50, d = 10", variable_selection);
    run(5, "direct and leave-one-out FDR estimators agree",
        [&](Criterion& c) { estimator_equivalence(c, z_grid); });
    run(6, "exceedance, dof-shift and scale ratios are monotone", monotonicity);
    run(7, "statistic-space and p-value-space step-up coincide", duality);
    run(8, "Simes global test keeps its level under the global null", simes_global_null);
    run(9, "distribution kernels: round trips, central limit, simulation", kernels);
    run(10, "simulate output independent of worker count", determinism);

    const auto failed = std::count_if(results.begin(), results.end(), [](const Criterion& c) { return !c.pass; });
    std::printf("%zu/%zu criteria passed\n", results.size() - static_cast<std::size_t>(failed), results.size());
    return static_cast<int>(failed);
}
