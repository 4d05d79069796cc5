#include "wbh/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "wbh/error.hpp"

namespace wbh::io {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& token, double& out) {
    if (token.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(token.c_str(), &end);
    return end == token.c_str() + token.size() && errno != ERANGE;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

MethodKind parse_method(const json& j) {
    const std::string kind = j.value("kind", "z");
    if (kind == "z") return MethodKind::z();
    if (kind == "t") {
        if (!j.contains("m")) throw InvalidInput("scenario method 't' needs 'm'");
        return MethodKind::t(j.at("m").get<double>());
    }
    throw InvalidInput("unknown method kind '" + kind + "'");
}

CovarianceSpec parse_covariance(const json& j) {
    const std::string type = j.value("type", "equicorrelated");
    if (type == "equicorrelated") return CovarianceSpec::equicorrelated(j.at("rho").get<double>());
    if (type == "random_pd") return CovarianceSpec::random_pd(j.at("seed").get<std::uint64_t>());
    if (type == "explicit") {
        const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows.size()) throw InvalidInput("explicit covariance must be square");
            for (std::size_t c = 0; c < rows.size(); ++c) {
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
            }
        }
        return CovarianceSpec::explicit_matrix(std::move(m));
    }
    throw InvalidInput("unknown covariance type '" + type + "'");
}

Scenario parse_scenario(const json& j, std::size_t index) {
    Scenario s;
    s.name = j.value("name", "scenario" + std::to_string(index));
    s.dimension = j.at("dimension").get<std::size_t>();
    if (j.contains("covariance")) s.covariance = parse_covariance(j.at("covariance"));
    if (j.contains("regression")) {
        const json& r = j.at("regression");
        RegressionSpec reg;
        reg.n = r.at("n").get<std::size_t>();
        reg.design_rho = r.value("design_rho", 0.5);
        reg.design_seed = r.value("design_seed", std::uint64_t{1});
        s.regression = reg;
    }
    if (j.contains("nulls")) {
        s.nulls = j.at("nulls").get<std::vector<std::size_t>>();
    } else {
        const std::size_t count = j.value("null_count", s.dimension);
        if (count > s.dimension) throw InvalidInput("null_count exceeds dimension");
        for (std::size_t i = 0; i < count; ++i) s.nulls.push_back(i);
    }
    s.signal = j.value("signal", 3.0);
    if (j.contains("method")) s.method = parse_method(j.at("method"));
    s.alpha = j.value("alpha", 0.05);
    s.replications = j.value("replications", std::size_t{1000});
    return s;
}

GridSpec parse_grid(const json& j) {
    GridSpec g;
    if (j.contains("dimensions")) g.dimensions = j.at("dimensions").get<std::vector<std::size_t>>();
    if (j.contains("rhos")) g.rhos = j.at("rhos").get<std::vector<double>>();
    if (j.contains("random_pd_seeds")) {
        g.random_pd_seeds = j.at("random_pd_seeds").get<std::vector<std::uint64_t>>();
    }
    if (j.contains("null_fractions")) g.null_fractions = j.at("null_fractions").get<std::vector<double>>();
    g.signal = j.value("signal", g.signal);
    if (j.contains("methods")) {
        g.methods.clear();
        for (const auto& m : j.at("methods")) g.methods.push_back(parse_method(m));
    }
    g.alpha = j.value("alpha", g.alpha);
    g.replications = j.value("replications", g.replications);
    return g;
}

json estimate_json(const FdrEstimate& e) { return {{"mean", e.mean_fdp}, {"std_error", e.std_error}}; }

}  // namespace

Eigen::MatrixXd read_csv_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line);
        std::vector<double> row(fields.size());
        bool numeric = true;
        for (std::size_t k = 0; k < fields.size(); ++k) {
            if (!parse_number(fields[k], row[k])) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw InvalidInput("CSV line " + std::to_string(line_no) + ": non-numeric field");
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw InvalidInput("CSV line " + std::to_string(line_no) + ": expected " +
                               std::to_string(rows.front().size()) + " fields, got " +
                               std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput("CSV input contains no numeric rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return m;
}

Eigen::MatrixXd read_csv_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    try {
        return read_csv_matrix(in);
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

Eigen::VectorXd read_csv_vector_file(const std::string& path) {
    const Eigen::MatrixXd m = read_csv_matrix_file(path);
    if (m.rows() == 1) return m.row(0).transpose();
    if (m.cols() == 1) return m.col(0);
    throw InvalidInput(path + ": expected a single row or column, got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<Scenario> parse_scenarios(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("scenario file is not valid JSON: ") + e.what());
    }
    try {
        if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
            throw InvalidInput("unsupported scenario schema_version");
        }
        std::vector<Scenario> out;
        if (j.contains("scenarios")) {
            for (const auto& s : j.at("scenarios")) out.push_back(parse_scenario(s, out.size()));
        }
        if (j.contains("grid")) {
            for (auto& s : generate_scenario_grid(parse_grid(j.at("grid")))) out.push_back(std::move(s));
        }
        if (out.empty()) throw InvalidInput("scenario file defines no scenarios");
        return out;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed scenario file: ") + e.what());
    }
}

void apply_run_settings(std::vector<Scenario>& scenarios, std::size_t replications, std::uint64_t base_seed) {
    for (std::size_t k = 0; k < scenarios.size(); ++k) {
        if (replications > 0) scenarios[k].replications = replications;
        scenarios[k].seed = mix64(base_seed + k);
    }
}

std::string reports_to_json(const std::vector<SimulationReport>& reports, std::uint64_t base_seed) {
    json rows = json::array();
    for (const auto& r : reports) {
        const Scenario& s = r.scenario;
        rows.push_back({
            {"name", s.name},
            {"dimension", s.dimension},
            {"covariance", s.regression ? "regression" : s.covariance.describe()},
            {"method", s.method_name()},
            {"alpha", s.alpha},
            {"alpha1", r.alpha1},
            {"nulls", s.nulls.size()},
            {"signal", s.signal},
            {"replications", s.replications},
            {"seed", s.seed},
            {"fdr_direct", estimate_json(r.direct)},
            {"fdr_leave_one_out", estimate_json(r.leave_one_out)},
            {"power", {{"mean", r.power}, {"std_error", r.power_se}}},
            {"plain_bh_fdr", estimate_json(r.plain_bh)},
            {"any_rejection", {{"mean", r.any_rejection}, {"std_error", r.any_rejection_se}}},
            {"estimator_mismatches", r.estimator_mismatches},
            {"failures", r.failures},
            {"valid", r.valid},
        });
        if (s.regression) {
            rows.back()["regression"] = {{"n", s.regression->n},
                                         {"design_rho", s.regression->design_rho},
                                         {"design_seed", s.regression->design_seed}};
        }
    }
    json doc = {{"schema_version", kSchemaVersion}, {"base_seed", base_seed}, {"reports", rows}};
    return doc.dump(2) + "\n";
}

std::string reports_to_tsv(const std::vector<SimulationReport>& reports) {
    std::ostringstream out;
    out << "d\tcovariance\tmethod\talpha\tfdr_direct\tse_direct\tfdr_loo\tse_loo\tpower\treps\tseed\n";
    for (const auto& r : reports) {
        const Scenario& s = r.scenario;
        out << s.dimension << '\t' << (s.regression ? "regression" : s.covariance.describe()) << '\t'
            << s.method_name() << '\t' << format_double(s.alpha) << '\t' << format_double(r.direct.mean_fdp)
            << '\t' << format_double(r.direct.std_error) << '\t' << format_double(r.leave_one_out.mean_fdp)
            << '\t' << format_double(r.leave_one_out.std_error) << '\t' << format_double(r.power) << '\t'
            << s.replications << '\t' << s.seed << '\n';
    }
    return out.str();
}

}  // namespace wbh::io
