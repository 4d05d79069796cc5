#pragma once

// Monte Carlo validation of the weighted step-up tests.
//
// Every replication draws from its own RNG stream keyed by (scenario seed,
// replication index) and results are reduced in replication order, so a
// report depends only on the scenario and never on the worker count.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wbh/corr.hpp"
#include "wbh/procedure.hpp"
#include "wbh/varselect.hpp"

namespace wbh {

/// Replication failure rate above which a run is marked invalid.
inline constexpr double kMaxFailureRate = 1e-4;

struct CovarianceSpec {
    enum class Type { explicit_matrix, equicorrelated, random_pd };

    Type type = Type::equicorrelated;
    Eigen::MatrixXd matrix;  // explicit_matrix only
    double rho = 0.0;        // equicorrelated only
    std::uint64_t seed = 0;  // random_pd only

    static CovarianceSpec explicit_matrix(Eigen::MatrixXd m);
    static CovarianceSpec equicorrelated(double rho);
    static CovarianceSpec random_pd(std::uint64_t seed);

    /// Materializes the d x d covariance.
    Eigen::MatrixXd build(std::size_t d) const;
    /// "equi(0.3)", "random_pd(7)" or "explicit".
    std::string describe() const;
};

/// Fixed-design regression: n rows drawn once from N(0, equicorrelated(design_rho)).
struct RegressionSpec {
    std::size_t n = 50;
    double design_rho = 0.5;
    std::uint64_t design_seed = 1;
};

struct Scenario {
    std::string name;
    std::size_t dimension = 0;
    CovarianceSpec covariance;
    /// When set, the scenario is a variable-selection run and `covariance`
    /// and `method` are ignored (the method is t with n - d dof).
    std::optional<RegressionSpec> regression;
    /// True nulls, 0-based and sorted.
    std::vector<std::size_t> nulls;
    /// Alternatives get mu_i = signal * sqrt(sigma_ii); in regression runs
    /// beta_i = signal * sqrt(a^ii), so both put the standardized effect at `signal`.
    double signal = 3.0;
    MethodKind method;
    double alpha = 0.05;
    std::size_t replications = 1000;
    std::uint64_t seed = 0;

    /// Throws InvalidInput / InvalidParameter on an inconsistent scenario.
    void validate() const;
    std::vector<std::size_t> alternatives() const;
    std::string method_name() const;
};

/// Exact rational for per-replication FDP values.
struct Fraction {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Fraction&, const Fraction&) = default;
};

Fraction operator+(Fraction a, Fraction b);

struct ReplicationResult {
    std::size_t rejections = 0;
    std::size_t false_count = 0;       // |rejected & I0|
    std::size_t true_discoveries = 0;  // |rejected \ I0|
    Fraction fdp;                      // false_count / max(R, 1)
    Fraction leave_one_out;            // sum_{i in I0} 1(p_i <= alpha_{R_-i + 1}) / (R_-i + 1)
    std::size_t plain_rejections = 0;  // unweighted BH at alpha / d, same draw
    Fraction plain_fdp;
    bool failed = false;
    std::string diagnostic;
};

/// Prepared scenario: covariance factored, design drawn and alpha1 solved once.
class ScenarioRunner {
public:
    explicit ScenarioRunner(Scenario scenario);

    const Scenario& scenario() const noexcept { return scenario_; }
    const CalibratedMethod& method() const noexcept { return method_; }

    /// Safe to call concurrently.
    ReplicationResult run(std::size_t rep_index) const;

private:
    ReplicationResult run_mean_test(std::size_t rep_index) const;
    ReplicationResult run_regression(std::size_t rep_index) const;
    void score(std::span<const double> transformed, std::span<const double> plain,
               ReplicationResult& out) const;

    Scenario scenario_;
    CalibratedMethod method_;
    std::vector<char> is_null_;
    std::optional<CorrelationModel> model_;
    Eigen::VectorXd nu_;
    Eigen::MatrixXd design_;
    Eigen::VectorXd beta_;
    std::optional<VariableSelector> selector_;
};

ReplicationResult run_replication(const Scenario& scenario, std::size_t rep_index);

/// Leave-one-out count R_{-i}: the step-up count on the p-values without
/// entry i, using shifted constants (j + 1) * alpha1.
std::size_t leave_one_out_count(std::span<const double> pvalues, std::size_t i, double alpha1);

enum class Estimator { direct, leave_one_out };

struct FdrEstimate {
    double mean_fdp = 0.0;
    double std_error = 0.0;
    std::size_t replications = 0;
    Estimator estimator = Estimator::direct;
};

struct SimulationReport {
    Scenario scenario;
    double alpha1 = 0.0;
    FdrEstimate direct;
    FdrEstimate leave_one_out;
    double power = 0.0;
    double power_se = 0.0;
    FdrEstimate plain_bh;
    /// Fraction of replications with at least one rejection.
    double any_rejection = 0.0;
    double any_rejection_se = 0.0;
    /// Replications whose two per-realization FDP values differ.
    std::size_t estimator_mismatches = 0;
    std::size_t failures = 0;
    bool valid = true;
    double wall_seconds = 0.0;
};

/// Runs all replications on `workers` threads (0 = hardware concurrency).
SimulationReport simulate(const Scenario& scenario, std::size_t workers = 1);

FdrEstimate estimate_fdr_direct(const Scenario& scenario, std::size_t workers = 1);
FdrEstimate estimate_fdr_leave_one_out(const Scenario& scenario, std::size_t workers = 1);

struct GridSpec {
    std::vector<std::size_t> dimensions{20};
    std::vector<double> rhos{-0.05, 0.0, 0.3, 0.7, 0.9};
    std::vector<std::uint64_t> random_pd_seeds;
    /// Fraction of true nulls; 1.0 = global null, 0.5 = half null.
    std::vector<double> null_fractions{1.0, 0.5};
    double signal = 3.0;
    std::vector<MethodKind> methods{MethodKind::z()};
    double alpha = 0.05;
    std::size_t replications = 1000;
    std::uint64_t seed = 0;
};

/// Cartesian product of the grid; scenario k gets seed mix64(seed + k).
/// Throws InvalidParameter for rho infeasible at some dimension.
std::vector<Scenario> generate_scenario_grid(const GridSpec& spec);

struct ConditionalLawBin {
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    std::size_t count = 0;
    double empirical = 0.0;  // share of draws with Y_i^2 >= threshold
    double predicted = 0.0;  // mean of nc_chi2_sf(threshold, 1, lambda) over the bin
    double std_error = 0.0;
    double z = 0.0;
};

struct ConditionalLawDiagnostic {
    std::size_t index = 0;
    double threshold = 0.0;
    std::vector<ConditionalLawBin> bins;
    double max_abs_z = 0.0;
    bool widened = false;
    std::string warning;
};

/// Checks that Y_i^2 given the other weighted coordinates follows a
/// noncentral chi^2_1 with noncentrality conditional_noncentrality(...).
/// Draws are binned by that noncentrality into equal-count bins; bins are
/// merged (and `widened` set) when fewer than `min_per_bin` draws would land
/// in each.
ConditionalLawDiagnostic conditional_law_check(const CorrelationModel& model, std::size_t i,
                                               std::size_t draws, std::uint64_t seed, double threshold,
                                               std::size_t bins = 10, std::size_t min_per_bin = 1000);

}  // namespace wbh
