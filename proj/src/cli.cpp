#include "wbh/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <sstream>

#include "wbh/corr.hpp"
#include "wbh/error.hpp"
#include "wbh/io.hpp"
#include "wbh/procedure.hpp"
#include "wbh/sim.hpp"
#include "wbh/varselect.hpp"

namespace wbh::cli {
namespace {

using nlohmann::json;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

MethodKind method_from(const RunConfig& config) {
    if (config.mode == "z") return MethodKind::z();
    if (config.mode == "t") {
        if (!config.m) throw InvalidInput("--mode t requires --m");
        return MethodKind::t(*config.m);
    }
    throw InvalidInput("--mode must be 'z' or 't', got '" + config.mode + "'");
}

void require_path(const std::string& path, const char* flag) {
    if (path.empty()) throw InvalidInput(std::string("missing required option ") + flag);
}

json outcome_json(const StepUpOutcome& o) {
    json j = {{"rejections", o.rejections}, {"rejected", o.rejected}};
    j["threshold"] = o.threshold ? json(*o.threshold) : json(nullptr);
    return j;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const NumericalFailure& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const DegenerateFit& e) {
        err << "error: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }
}

}  // namespace

int cmd_calibrate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            require_path(config.sigma_path, "--sigma");
            const MethodKind kind = method_from(config);
            const CorrelationModel model(io::read_csv_matrix_file(config.sigma_path));
            const auto weights = to_std(model.weights());
            const CalibratedMethod method = calibrate(weights, config.alpha, kind);
            json doc = {{"schema_version", io::kSchemaVersion},
                        {"command", "calibrate"},
                        {"method", kind.name()},
                        {"alpha", config.alpha},
                        {"dimension", weights.size()},
                        {"weights", weights},
                        {"alpha1", method.alpha1},
                        {"critical_constants", method.critical_constants()},
                        {"residual", method.residual}};
            out << doc.dump(2) << '\n';
            return int{kSuccess};
        },
        err);
}

int cmd_test(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            require_path(config.sigma_path, "--sigma");
            require_path(config.stats_path, "--stats");
            const MethodKind kind = method_from(config);
            const Eigen::MatrixXd sigma = io::read_csv_matrix_file(config.sigma_path);
            const auto x = to_std(io::read_csv_vector_file(config.stats_path));
            WeightedTestReport report;
            if (kind.kind == TestKind::z) {
                report = weighted_test_z(x, sigma, config.alpha);
            } else {
                // Without --v, v = m makes T_i = x_i: the stats are taken as t statistics.
                const double v = config.v.value_or(kind.m);
                report = weighted_test_t(x, v, kind.m, sigma, config.alpha);
            }
            json doc = {{"schema_version", io::kSchemaVersion},
                        {"command", "test"},
                        {"method", kind.name()},
                        {"alpha", config.alpha},
                        {"alpha1", report.method.alpha1},
                        {"weights", report.method.weights},
                        {"statistics", report.statistics},
                        {"pvalues", report.pvalues},
                        {"transformed", report.transformed},
                        {"outcome", outcome_json(report.outcome)}};
            out << doc.dump(2) << '\n';
            return int{kSuccess};
        },
        err);
}

int cmd_select(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            require_path(config.design_path, "--design");
            require_path(config.response_path, "--response");
            RegressionProblem problem{io::read_csv_matrix_file(config.design_path),
                                      io::read_csv_vector_file(config.response_path)};
            const SelectionReport report = select_variables_report(problem, config.alpha);
            json doc = {{"schema_version", io::kSchemaVersion},
                        {"command", "select"},
                        {"alpha", config.alpha},
                        {"n", problem.design.rows()},
                        {"d", problem.design.cols()},
                        {"dof", report.fit.dof},
                        {"beta_hat", to_std(report.fit.beta_hat)},
                        {"tau2_hat", report.fit.tau2_hat},
                        {"t_squared", report.t_squared},
                        {"weights", report.weights},
                        {"pvalues", report.pvalues},
                        {"transformed", report.transformed},
                        {"alpha1", report.method.alpha1},
                        {"selected", report.outcome.rejected},
                        {"outcome", outcome_json(report.outcome)}};
            out << doc.dump(2) << '\n';
            return int{kSuccess};
        },
        err);
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(
        [&] {
            require_path(config.scenario_path, "--scenario");
            if (config.format != "json" && config.format != "tsv") {
                throw InvalidInput("--format must be 'json' or 'tsv'");
            }
            std::ifstream in(config.scenario_path);
            if (!in) throw InvalidInput("cannot open '" + config.scenario_path + "'");
            std::stringstream buf;
            buf << in.rdbuf();
            auto scenarios = io::parse_scenarios(buf.str());
            io::apply_run_settings(scenarios, config.replications, config.seed);

            const auto start = std::chrono::steady_clock::now();
            std::vector<SimulationReport> reports;
            bool valid = true;
            for (const auto& s : scenarios) {
                reports.push_back(simulate(s, config.workers));
                if (!reports.back().valid) {
                    valid = false;
                    err << "warning: scenario '" << s.name << "' had " << reports.back().failures
                        << " failed replications\n";
                }
            }
            out << (config.format == "json" ? io::reports_to_json(reports, config.seed)
                                            : io::reports_to_tsv(reports));
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            err << "# " << reports.size() << " scenario(s), wall time " << wall << " s\n";
            return valid ? int{kSuccess} : int{kNumericalFailure};
        },
        err);
}

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.command == "calibrate") return cmd_calibrate(config, out, err);
    if (config.command == "test") return cmd_test(config, out, err);
    if (config.command == "select") return cmd_select(config, out, err);
    if (config.command == "simulate") return cmd_simulate(config, out, err);
    err << "error: unknown command '" << config.command << "'\n";
    return kInvalidInput;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weighted Benjamini-Hochberg tests for correlated normal means"};
    app.require_subcommand(1);
    RunConfig config;

    auto* calibrate = app.add_subcommand("calibrate", "Solve alpha1 and print weights and critical constants");
    calibrate->add_option("--sigma", config.sigma_path, "Covariance matrix CSV")->required();
    calibrate->add_option("--alpha", config.alpha, "Target FDR level")->required();
    calibrate->add_option("--mode", config.mode, "z or t")->check(CLI::IsMember({"z", "t"}));
    calibrate->add_option("--m", config.m, "Denominator degrees of freedom (t mode)");

    auto* test = app.add_subcommand("test", "Run the weighted step-up test on observations");
    test->add_option("--sigma", config.sigma_path, "Covariance matrix CSV")->required();
    test->add_option("--stats", config.stats_path, "Observation vector CSV")->required();
    test->add_option("--alpha", config.alpha, "Target FDR level")->required();
    test->add_option("--mode", config.mode, "z or t")->check(CLI::IsMember({"z", "t"}));
    test->add_option("--m", config.m, "Denominator degrees of freedom (t mode)");
    test->add_option("--v", config.v, "Scale statistic V ~ tau^2 chi^2_m (t mode)");

    auto* select = app.add_subcommand("select", "FDR-controlled variable selection");
    select->add_option("--design", config.design_path, "Design matrix CSV (n x d)")->required();
    select->add_option("--response", config.response_path, "Response vector CSV")->required();
    select->add_option("--alpha", config.alpha, "Target FDR level")->required();

    auto* sim = app.add_subcommand("simulate", "Monte Carlo FDR validation");
    sim->add_option("--scenario", config.scenario_path, "Scenario JSON")->required();
    sim->add_option("--reps", config.replications, "Replications per scenario")->required();
    sim->add_option("--seed", config.seed, "Base seed")->required();
    sim->add_option("--workers", config.workers, "Worker threads");
    sim->add_option("--format", config.format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }
    for (const auto* sub : {calibrate, test, select, sim}) {
        if (sub->parsed()) config.command = sub->get_name();
    }
    if (config.command == "simulate" && config.replications == 0) {
        err << "error: --reps must be at least 1\n";
        return kInvalidInput;
    }
    return run_command(config, out, err);
}

}  // namespace wbh::cli
