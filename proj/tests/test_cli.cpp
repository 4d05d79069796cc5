#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wbh/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "wbh");
    std::ostringstream out, err;
    const int code = wbh::cli::main(args, out, err);
    return {code, out.str(), err.str()};
}

std::string write(const std::string& name, const std::string& body) {
    const fs::path dir = fs::temp_directory_path() / "wbh_cli_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << body;
    return p.string();
}

}  // namespace

TEST_CASE("calibrate", "[cli]") {
    std::string id;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) id += (i == j ? "1" : "0") + std::string(j < 9 ? "," : "\n");
    }
    const Run r = run({"calibrate", "--sigma", write("id.csv", id), "--alpha", "0.05", "--mode", "z"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["alpha1"].get<double>() == 0.005);
    CHECK(j["critical_constants"].size() == 10);
    CHECK(j["schema_version"] == 1);

    const Run e = run({"calibrate", "--sigma", write("e.csv", "s1,s2\n1,0.5\n0.5,1\n"), "--alpha", "0.05"});
    REQUIRE(e.code == 0);
    for (double w : json::parse(e.out)["weights"]) CHECK(std::abs(w - 0.75) < 1e-15);

    const Run bad = run({"calibrate", "--sigma", write("bad.csv", "1,2\n2,1\n"), "--alpha", "0.05"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("pivot 1") != std::string::npos);

    CHECK(run({"calibrate", "--sigma", write("e.csv", "1,0.5\n0.5,1\n"), "--alpha", "0.05", "--mode", "t"}).code == 2);
    CHECK(run({"calibrate", "--alpha", "0.05"}).code == 2);
    CHECK(run({"calibrate", "--sigma", "/nonexistent.csv", "--alpha", "0.05"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
}

TEST_CASE("test", "[cli]") {
    const std::string s = write("s.csv", "1,0.5,0.2\n0.5,1,0.1\n0.2,0.1,1\n");
    const Run zero = run({"test", "--sigma", s, "--stats", write("z.csv", "0,0,0\n"), "--alpha", "0.05",
                          "--mode", "z"});
    REQUIRE(zero.code == 0);
    CHECK(json::parse(zero.out)["outcome"]["rejections"] == 0);
    CHECK(json::parse(zero.out)["outcome"]["threshold"].is_null());

    const Run hit = run({"test", "--sigma", s, "--stats", write("x.csv", "5\n0.2\n-4\n"), "--alpha", "0.05",
                         "--mode", "t", "--m", "30", "--v", "30"});
    REQUIRE(hit.code == 0);
    CHECK(json::parse(hit.out)["outcome"]["rejected"] == json::array({0, 2}));
    CHECK(run({"test", "--sigma", s, "--stats", write("w.csv", "1,2\n"), "--alpha", "0.05"}).code == 2);
}

TEST_CASE("select", "[cli]") {
    std::ostringstream x, y;
    x.precision(17);
    y.precision(17);
    // Deterministic design with two strong columns.
    for (int r = 0; r < 50; ++r) {
        double row[6];
        for (int c = 0; c < 6; ++c) row[c] = std::sin(1.3 * r * (c + 1) + c) + 0.3 * std::cos(0.7 * r);
        for (int c = 0; c < 6; ++c) x << row[c] << (c < 5 ? "," : "\n");
        y << 10.0 * row[1] - 10.0 * row[4] + std::sin(17.0 * r) << "\n";
    }
    const Run r = run({"select", "--design", write("x.csv", x.str()), "--response", write("y.csv", y.str()),
                       "--alpha", "0.05"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["selected"] == json::array({1, 4}));

    std::ostringstream yexact;
    yexact.precision(17);
    for (int r2 = 0; r2 < 50; ++r2) yexact << std::sin(1.3 * r2 * 2 + 1) + 0.3 * std::cos(0.7 * r2) << "\n";
    const Run noiseless = run({"select", "--design", write("x.csv", x.str()), "--response",
                               write("y0.csv", yexact.str()), "--alpha", "0.05"});
    CHECK(noiseless.code == 3);
}

TEST_CASE("simulate", "[cli]") {
    const std::string sc = write("sc.json", R"({"scenarios": [
        {"name": "a", "dimension": 6, "covariance": {"rho": 0.4}, "null_count": 3},
        {"name": "b", "dimension": 4, "regression": {"n": 20}, "null_count": 2}]})");
    const Run a = run({"simulate", "--scenario", sc, "--reps", "2000", "--seed", "9", "--format", "tsv"});
    const Run b = run({"simulate", "--scenario", sc, "--reps", "2000", "--seed", "9", "--workers", "8",
                       "--format", "tsv"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.err.find("wall time") != std::string::npos);
    const Run j = run({"simulate", "--scenario", sc, "--reps", "100", "--seed", "9"});
    REQUIRE(j.code == 0);
    CHECK(json::parse(j.out)["reports"].size() == 2);
    CHECK(run({"simulate", "--scenario", sc, "--reps", "0", "--seed", "1"}).code == 2);
    CHECK(run({"simulate", "--scenario", write("bad.json", "{"), "--reps", "5", "--seed", "1"}).code == 2);
    CHECK(run({"simulate", "--scenario", sc, "--reps", "5", "--seed", "1", "--format", "xml"}).code == 2);
}
