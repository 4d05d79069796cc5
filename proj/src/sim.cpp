#include "wbh/sim.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <thread>

#include "wbh/dist.hpp"
#include "wbh/error.hpp"
#include "wbh/varselect.hpp"

namespace wbh {
namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

struct MeanAndError {
    double mean = 0.0;
    double std_error = 0.0;
};

template <class Get>
MeanAndError mean_and_error(const std::vector<ReplicationResult>& results, std::size_t used, Get get) {
    if (used == 0) return {};
    CompensatedSum sum;
    for (const auto& r : results) {
        if (!r.failed) sum.add(get(r));
    }
    const double mean = sum.value() / static_cast<double>(used);
    if (used < 2) return {mean, 0.0};
    CompensatedSum sq;
    for (const auto& r : results) {
        if (r.failed) continue;
        const double dev = get(r) - mean;
        sq.add(dev * dev);
    }
    const double var = sq.value() / static_cast<double>(used - 1);
    return {mean, std::sqrt(var / static_cast<double>(used))};
}

Fraction reduced(std::uint64_t num, std::uint64_t den) {
    if (num == 0) return {0, 1};
    const std::uint64_t g = std::gcd(num, den);
    return {num / g, den / g};
}

std::vector<std::size_t> ascending_order(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    return order;
}

// R_{-i} given the full ascending order and the position of i in it.
std::size_t leave_one_out_count_sorted(std::span<const double> pvalues, const std::vector<std::size_t>& order,
                                       std::size_t position, double alpha1) {
    const std::size_t d = order.size();
    for (std::size_t j = d - 1; j >= 1; --j) {
        // j-th smallest (1-based) of the remaining d - 1 values.
        const std::size_t k = (j <= position) ? j - 1 : j;
        if (pvalues[order[k]] <= static_cast<double>(j + 1) * alpha1) return j;
    }
    return 0;
}

}  // namespace

Fraction operator+(Fraction a, Fraction b) {
    const std::uint64_t l = std::lcm(a.den, b.den);
    return reduced(a.num * (l / a.den) + b.num * (l / b.den), l);
}

CovarianceSpec CovarianceSpec::explicit_matrix(Eigen::MatrixXd m) {
    CovarianceSpec s;
    s.type = Type::explicit_matrix;
    s.matrix = std::move(m);
    return s;
}

CovarianceSpec CovarianceSpec::equicorrelated(double rho) {
    CovarianceSpec s;
    s.type = Type::equicorrelated;
    s.rho = rho;
    return s;
}

CovarianceSpec CovarianceSpec::random_pd(std::uint64_t seed) {
    CovarianceSpec s;
    s.type = Type::random_pd;
    s.seed = seed;
    return s;
}

Eigen::MatrixXd CovarianceSpec::build(std::size_t d) const {
    switch (type) {
        case Type::explicit_matrix:
            if (static_cast<std::size_t>(matrix.rows()) != d || static_cast<std::size_t>(matrix.cols()) != d) {
                throw InvalidInput("explicit covariance is " + std::to_string(matrix.rows()) + "x" +
                                   std::to_string(matrix.cols()) + ", scenario dimension is " +
                                   std::to_string(d));
            }
            return matrix;
        case Type::equicorrelated:
            if (!equicorrelated_feasible(d, rho)) {
                throw InvalidParameter("rho = " + std::to_string(rho) +
                                       " is not a valid equicorrelation for d = " + std::to_string(d));
            }
            return equicorrelated_matrix(d, rho);
        case Type::random_pd: {
            Rng rng = make_stream(seed, 0x5eed);
            return random_correlation_matrix(d, rng);
        }
    }
    throw InvalidInput("unknown covariance type");
}

std::string CovarianceSpec::describe() const {
    char buf[64];
    switch (type) {
        case Type::explicit_matrix:
            return "explicit";
        case Type::equicorrelated:
            return "equi(" + std::string(buf, std::to_chars(buf, buf + sizeof buf, rho).ptr) + ")";
        case Type::random_pd:
            std::snprintf(buf, sizeof buf, "random_pd(%llu)", static_cast<unsigned long long>(seed));
            return buf;
    }
    return "unknown";
}

void Scenario::validate() const {
    if (dimension == 0) throw InvalidInput("scenario '" + name + "': dimension must be positive");
    if (replications == 0) throw InvalidParameter("scenario '" + name + "': replication count must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("scenario '" + name + "': alpha must lie in (0, 1)");
    for (std::size_t k = 0; k < nulls.size(); ++k) {
        if (nulls[k] >= dimension) throw InvalidInput("scenario '" + name + "': null index out of range");
        if (k > 0 && nulls[k] <= nulls[k - 1]) {
            throw InvalidInput("scenario '" + name + "': null indices must be sorted and distinct");
        }
    }
    if (!std::isfinite(signal)) throw InvalidParameter("scenario '" + name + "': signal must be finite");
    if (regression) {
        if (regression->n <= dimension) {
            throw InvalidInput("scenario '" + name + "': regression needs n > d");
        }
        if (!equicorrelated_feasible(dimension, regression->design_rho)) {
            throw InvalidParameter("scenario '" + name + "': infeasible design correlation");
        }
    } else if (covariance.type == CovarianceSpec::Type::equicorrelated &&
               !equicorrelated_feasible(dimension, covariance.rho)) {
        throw InvalidParameter("scenario '" + name + "': rho = " + std::to_string(covariance.rho) +
                               " is infeasible for d = " + std::to_string(dimension));
    }
}

std::vector<std::size_t> Scenario::alternatives() const {
    std::vector<std::size_t> out;
    std::size_t k = 0;
    for (std::size_t i = 0; i < dimension; ++i) {
        if (k < nulls.size() && nulls[k] == i) {
            ++k;
        } else {
            out.push_back(i);
        }
    }
    return out;
}

std::string Scenario::method_name() const {
    if (regression) {
        return "select(t(" + std::to_string(regression->n - dimension) + "))";
    }
    return method.name();
}

ScenarioRunner::ScenarioRunner(Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    const std::size_t d = scenario_.dimension;
    is_null_.assign(d, 0);
    for (std::size_t i : scenario_.nulls) is_null_[i] = 1;

    if (scenario_.regression) {
        const RegressionSpec& reg = *scenario_.regression;
        Rng rng = make_stream(reg.design_seed, 0xd351);
        const CorrelationModel column_model(equicorrelated_matrix(d, reg.design_rho));
        design_.resize(static_cast<Eigen::Index>(reg.n), static_cast<Eigen::Index>(d));
        Eigen::VectorXd scratch;
        Eigen::VectorXd row;
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        for (Eigen::Index r = 0; r < design_.rows(); ++r) {
            sample_standardized(column_model.chol(), zero, rng, scratch, row);
            design_.row(r) = row.transpose();
        }
        selector_.emplace(design_, scenario_.alpha);
        method_ = selector_->method();
        beta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        for (std::size_t i : scenario_.alternatives()) {
            const auto k = static_cast<Eigen::Index>(i);
            beta_(k) = scenario_.signal * std::sqrt(selector_->factor().gram_inv()(k, k));
        }
        return;
    }

    model_.emplace(scenario_.covariance.build(d));
    MeanSpec mean = MeanSpec::zero(d);
    for (std::size_t i : scenario_.alternatives()) {
        const auto k = static_cast<Eigen::Index>(i);
        mean.mu(k) = scenario_.signal * model_->scale()(k);
    }
    nu_ = standardized_mean(*model_, mean);
    const auto& w = model_->weights();
    method_ = calibrate(std::span<const double>(w.data(), d), scenario_.alpha, scenario_.method);
}

ReplicationResult ScenarioRunner::run(std::size_t rep_index) const {
    try {
        return scenario_.regression ? run_regression(rep_index) : run_mean_test(rep_index);
    } catch (const Error& e) {
        ReplicationResult failed;
        failed.failed = true;
        failed.diagnostic = "replication " + std::to_string(rep_index) + ": " + e.what();
        return failed;
    }
}

ReplicationResult ScenarioRunner::run_mean_test(std::size_t rep_index) const {
    const std::size_t d = scenario_.dimension;
    Rng rng = make_stream(scenario_.seed, rep_index);
    Eigen::VectorXd scratch;
    Eigen::VectorXd z;
    sample_standardized(model_->chol(), nu_, rng, scratch, z);

    const MethodKind kind = method_.kind;
    double scale = 1.0;  // m / V for t-tests
    if (kind.kind == TestKind::t) {
        std::chi_squared_distribution<double> chi2(kind.m);
        const double v = chi2(rng);
        scale = kind.m / v;
    }

    const auto& w = model_->weights();
    std::vector<double> transformed(d);
    std::vector<double> plain(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const double sq = scale * z(k) * z(k);
        plain[i] = kind.sf(sq);
        transformed[i] = w(k) == 1.0 ? plain[i] : kind.sf(sq / w(k));
    }
    ReplicationResult out;
    score(transformed, plain, out);
    return out;
}

ReplicationResult ScenarioRunner::run_regression(std::size_t rep_index) const {
    Rng rng = make_stream(scenario_.seed, rep_index);
    std::normal_distribution<double> normal;
    Eigen::VectorXd y = design_ * beta_;
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) += normal(rng);
    const SelectionReport report = selector_->select(y);
    ReplicationResult out;
    score(report.transformed, report.pvalues, out);
    return out;
}

void ScenarioRunner::score(std::span<const double> transformed, std::span<const double> plain,
                           ReplicationResult& out) const {
    const std::size_t d = transformed.size();
    const double alpha1 = method_.alpha1;

    const StepUpOutcome outcome = bh_stepup(transformed, alpha1);
    out.rejections = outcome.rejections;
    for (std::size_t i : outcome.rejected) {
        if (is_null_[i]) {
            ++out.false_count;
        } else {
            ++out.true_discoveries;
        }
    }
    out.fdp = reduced(out.false_count, std::max<std::size_t>(out.rejections, 1));

    const auto order = ascending_order(transformed);
    std::vector<std::size_t> position(d);
    for (std::size_t k = 0; k < d; ++k) position[order[k]] = k;
    for (std::size_t i : scenario_.nulls) {
        const std::size_t r = leave_one_out_count_sorted(transformed, order, position[i], alpha1);
        if (transformed[i] <= static_cast<double>(r + 1) * alpha1) {
            out.leave_one_out = out.leave_one_out + Fraction{1, r + 1};
        }
    }

    const StepUpOutcome unweighted = bh_stepup(plain, scenario_.alpha / static_cast<double>(d));
    out.plain_rejections = unweighted.rejections;
    std::size_t plain_false = 0;
    for (std::size_t i : unweighted.rejected) plain_false += is_null_[i] ? 1 : 0;
    out.plain_fdp = reduced(plain_false, std::max<std::size_t>(unweighted.rejections, 1));
}

ReplicationResult run_replication(const Scenario& scenario, std::size_t rep_index) {
    return ScenarioRunner(scenario).run(rep_index);
}

std::size_t leave_one_out_count(std::span<const double> pvalues, std::size_t i, double alpha1) {
    if (i >= pvalues.size()) throw InvalidInput("leave_one_out_count: index out of range");
    const auto order = ascending_order(pvalues);
    const auto it = std::find(order.begin(), order.end(), i);
    return leave_one_out_count_sorted(pvalues, order, static_cast<std::size_t>(it - order.begin()), alpha1);
}

SimulationReport simulate(const Scenario& scenario, std::size_t workers) {
    const auto start = std::chrono::steady_clock::now();
    const ScenarioRunner runner(scenario);
    const std::size_t reps = scenario.replications;

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, reps);

    std::vector<ReplicationResult> results(reps);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) results[r] = runner.run(r);
    };
    if (workers <= 1) {
        work(0, reps);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (reps + workers - 1) / workers;
        for (std::size_t k = 0; k < workers; ++k) {
            const std::size_t begin = k * chunk;
            const std::size_t end = std::min(reps, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(work, begin, end);
        }
    }

    SimulationReport report;
    report.scenario = scenario;
    report.alpha1 = runner.method().alpha1;
    for (const auto& r : results) {
        if (r.failed) {
            ++report.failures;
        } else if (!(r.fdp == r.leave_one_out)) {
            ++report.estimator_mismatches;
        }
    }
    const std::size_t used = reps - report.failures;
    report.valid = static_cast<double>(report.failures) <= kMaxFailureRate * static_cast<double>(reps) &&
                   used > 0;

    const auto direct = mean_and_error(results, used, [](const ReplicationResult& r) { return r.fdp.value(); });
    const auto loo =
        mean_and_error(results, used, [](const ReplicationResult& r) { return r.leave_one_out.value(); });
    const auto plain =
        mean_and_error(results, used, [](const ReplicationResult& r) { return r.plain_fdp.value(); });
    const auto any = mean_and_error(results, used,
                                    [](const ReplicationResult& r) { return r.rejections > 0 ? 1.0 : 0.0; });
    report.direct = {direct.mean, direct.std_error, used, Estimator::direct};
    report.leave_one_out = {loo.mean, loo.std_error, used, Estimator::leave_one_out};
    report.plain_bh = {plain.mean, plain.std_error, used, Estimator::direct};
    report.any_rejection = any.mean;
    report.any_rejection_se = any.std_error;

    const std::size_t n_alt = scenario.dimension - scenario.nulls.size();
    if (n_alt > 0) {
        const auto power = mean_and_error(results, used, [n_alt](const ReplicationResult& r) {
            return static_cast<double>(r.true_discoveries) / static_cast<double>(n_alt);
        });
        report.power = power.mean;
        report.power_se = power.std_error;
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

FdrEstimate estimate_fdr_direct(const Scenario& scenario, std::size_t workers) {
    return simulate(scenario, workers).direct;
}

FdrEstimate estimate_fdr_leave_one_out(const Scenario& scenario, std::size_t workers) {
    return simulate(scenario, workers).leave_one_out;
}

std::vector<Scenario> generate_scenario_grid(const GridSpec& spec) {
    std::vector<CovarianceSpec> covariances;
    for (double rho : spec.rhos) covariances.push_back(CovarianceSpec::equicorrelated(rho));
    for (std::uint64_t s : spec.random_pd_seeds) covariances.push_back(CovarianceSpec::random_pd(s));

    std::vector<Scenario> out;
    for (std::size_t d : spec.dimensions) {
        for (const auto& cov : covariances) {
            if (cov.type == CovarianceSpec::Type::equicorrelated && !equicorrelated_feasible(d, cov.rho)) {
                throw InvalidParameter("grid: rho = " + std::to_string(cov.rho) +
                                       " is infeasible for d = " + std::to_string(d) + " (need rho > " +
                                       std::to_string(-1.0 / static_cast<double>(d - 1)) + ")");
            }
            for (double fraction : spec.null_fractions) {
                if (!(fraction >= 0.0 && fraction <= 1.0)) {
                    throw InvalidParameter("grid: null fraction must lie in [0, 1]");
                }
                const auto n_null = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(d)));
                for (const MethodKind& method : spec.methods) {
                    Scenario s;
                    s.dimension = d;
                    s.covariance = cov;
                    s.nulls.resize(n_null);
                    std::iota(s.nulls.begin(), s.nulls.end(), std::size_t{0});
                    s.signal = spec.signal;
                    s.method = method;
                    s.alpha = spec.alpha;
                    s.replications = spec.replications;
                    s.seed = mix64(spec.seed + out.size());
                    char buf[160];
                    std::snprintf(buf, sizeof buf, "d%zu_%s_null%zu_%s", d, cov.describe().c_str(), n_null,
                                  method.name().c_str());
                    s.name = buf;
                    s.validate();
                    out.push_back(std::move(s));
                }
            }
        }
    }
    return out;
}

ConditionalLawDiagnostic conditional_law_check(const CorrelationModel& model, std::size_t i,
                                               std::size_t draws, std::uint64_t seed, double threshold,
                                               std::size_t bins, std::size_t min_per_bin) {
    const std::size_t d = model.dimension();
    if (i >= d) throw InvalidInput("conditional_law_check: index out of range");
    if (draws == 0 || bins == 0) throw InvalidParameter("conditional_law_check: need draws and bins");
    if (!(threshold >= 0.0)) throw InvalidParameter("conditional_law_check: threshold must be nonnegative");

    ConditionalLawDiagnostic diag;
    diag.index = i;
    diag.threshold = threshold;
    if (draws / bins < min_per_bin) {
        const std::size_t fewer = std::max<std::size_t>(1, draws / std::max<std::size_t>(min_per_bin, 1));
        diag.widened = true;
        diag.warning = "only " + std::to_string(draws) + " draws for " + std::to_string(bins) +
                       " bins; widened to " + std::to_string(fewer) + " bins";
        bins = fewer;
    }

    // Under mu = 0 the weighted vector Y = diag(w^{-1/2}) Z has delta = 0.
    Rng rng = make_stream(seed, 0x1e33a2);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    const Eigen::VectorXd inv_root_w = model.weights().cwiseSqrt().cwiseInverse();
    Eigen::VectorXd col = model.gamma().col(static_cast<Eigen::Index>(i));
    col(static_cast<Eigen::Index>(i)) = 0.0;

    struct Draw {
        double lambda;
        bool exceed;
    };
    std::vector<Draw> samples(draws);
    Eigen::VectorXd scratch;
    Eigen::VectorXd z;
    for (std::size_t k = 0; k < draws; ++k) {
        sample_standardized(model.chol(), zero, rng, scratch, z);
        const Eigen::VectorXd y = z.cwiseProduct(inv_root_w);
        const double proj = col.dot(y);
        const double yi = y(static_cast<Eigen::Index>(i));
        samples[k] = {proj * proj, yi * yi >= threshold};
    }
    std::sort(samples.begin(), samples.end(), [](const Draw& a, const Draw& b) { return a.lambda < b.lambda; });

    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t begin = b * draws / bins;
        const std::size_t end = (b + 1) * draws / bins;
        if (begin >= end) continue;
        ConditionalLawBin bin;
        bin.lambda_lo = samples[begin].lambda;
        bin.lambda_hi = samples[end - 1].lambda;
        bin.count = end - begin;
        CompensatedSum hits;
        CompensatedSum pred;
        CompensatedSum var;
        for (std::size_t k = begin; k < end; ++k) {
            const double p = dist::nc_chi2_sf(threshold, 1.0, samples[k].lambda);
            hits.add(samples[k].exceed ? 1.0 : 0.0);
            pred.add(p);
            var.add(p * (1.0 - p));
        }
        const double n = static_cast<double>(bin.count);
        bin.empirical = hits.value() / n;
        bin.predicted = pred.value() / n;
        bin.std_error = std::sqrt(std::max(var.value(), 0.0)) / n;
        const double diff = bin.empirical - bin.predicted;
        if (bin.std_error > 0.0) {
            bin.z = diff / bin.std_error;
        } else {
            bin.z = std::abs(diff) < 1e-12 ? 0.0 : std::copysign(INFINITY, diff);
        }
        diag.max_abs_z = std::max(diag.max_abs_z, std::abs(bin.z));
        diag.bins.push_back(bin);
    }
    return diag;
}

}  // namespace wbh
