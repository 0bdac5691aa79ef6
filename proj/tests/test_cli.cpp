#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tailrisk/cli.hpp"

using namespace tailrisk::cli;
using nlohmann::json;

namespace {

const std::string config_dir = TAILRISK_CONFIG_DIR;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto dir = std::filesystem::temp_directory_path() / "tailrisk_cli_test";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << content;
    return p;
}

std::string data_rows(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::string rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '#') {
            rows += line + "\n";
        }
    }
    return rows;
}

json small_ruin_config() {
    return {{"seed", 5},
            {"F", {{"family", "pareto"}, {"params", {{"alpha", 2}, {"xm", 1}}}, {"shift", -1}}},
            {"G", {{"family", "discrete"}, {"params", {{"atoms", {0.5, 0.9}}, {"probs", {0.5, 0.5}}}}}},
            {"dependence", {{"kind", "fgm"}, {"theta", 0.5}}},
            {"horizon", 3},
            {"x_grid", {{"from", 1}, {"to", 50}, {"points", 6}}},
            {"paths", 100000},
            {"chunks", 1}};
}

}  // namespace

TEST_CASE("x grid parsing") {
    CHECK(parse_x_grid(json::parse("[1, 2, 5]")) == std::vector<double>{1, 2, 5});
    const auto g = parse_x_grid(json::parse(R"({"from": 1, "to": 100, "points": 3})"));
    REQUIRE(g.size() == 3);
    CHECK(g[0] == 1.0);
    CHECK(g[1] == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(g[2] == 100.0);
    CHECK_THROWS_AS(parse_x_grid(json::parse("[1, 1]")), ConfigError);
    CHECK_THROWS_AS(parse_x_grid(json::parse("[3, 2]")), ConfigError);
    CHECK_THROWS_AS(parse_x_grid(json::parse(R"({"from": 5, "to": 1, "points": 3})")), ConfigError);
}

TEST_CASE("product-tail on the two-point example") {
    const auto r = run({"product-tail", "--config", config_dir + "/example_two_point_fgm.json"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# config_hash: fnv1a64:") != std::string::npos);
    CHECK(r.out.find("# seed: 20241") != std::string::npos);
    CHECK(r.out.find("# tool: tailrisk ") != std::string::npos);
    std::istringstream is(data_rows(r.out));
    std::string header;
    std::getline(is, header);
    CHECK(header == "x,i,exact,asym,asym_err,mc,mc_std_err,mc_ci_lo,mc_ci_hi");
    std::string line;
    bool found = false;
    while (std::getline(is, line)) {
        if (line.rfind("10,", 0) == 0) {
            found = true;
            std::vector<double> cols;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) {
                cols.push_back(std::stod(cell));
            }
            CHECK(cols[2] == doctest::Approx(0.0285625).epsilon(1e-12));
            CHECK(cols[3] == doctest::Approx(0.02875).epsilon(1e-12));
        }
    }
    CHECK(found);
}

TEST_CASE("independence: exact column equals the independence formula") {
    json c = json::parse(std::ifstream(config_dir + "/example_two_point_fgm.json"));
    c["dependence"] = {{"kind", "fgm"}, {"theta", 0.0}};
    c["methods"] = {"exact"};
    const auto p = temp_file("indep.json", c.dump());
    const auto r = run({"product-tail", "--config", p.string()});
    REQUIRE(r.code == 0);
    std::istringstream is(data_rows(r.out));
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        const double x = std::stod(line.substr(0, line.find(',')));
        const double v = std::stod(line.substr(line.rfind(',') + 1));
        const double fx = x > 1 ? 1 / (x * x) : 1.0;
        const double fx2 = x / 2 > 1 ? 4 / (x * x) : 1.0;
        CHECK(v == doctest::Approx(0.5 * (fx + fx2)).epsilon(1e-14));
    }
}

TEST_CASE("missing seed is a config error") {
    json c = json::parse(std::ifstream(config_dir + "/example_two_point_fgm.json"));
    c.erase("seed");
    const auto p = temp_file("noseed.json", c.dump());
    const auto r = run({"product-tail", "--config", p.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
    // --seed supplies it.
    c["methods"] = {"exact"};
    const auto q = temp_file("noseed2.json", c.dump());
    CHECK(run({"product-tail", "--config", q.string(), "--seed", "9"}).code == 0);
}

TEST_CASE("config errors") {
    CHECK(run({"product-tail", "--config", "/nonexistent/config.json"}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({}).code == 2);
    const auto p = temp_file("bad.json", "{ not json");
    CHECK(run({"ruin", "--config", p.string()}).code == 2);
    json c = small_ruin_config();
    c["dependence"] = {{"kind", "fgm"}, {"theta", 3}};
    const auto q = temp_file("badtheta.json", c.dump());
    CHECK(run({"ruin", "--config", q.string()}).code == 2);
}

TEST_CASE("verify: lattice law with fractional t") {
    const auto r = run({"verify", "--config", config_dir + "/verify_lattice.json"});
    CHECK(r.code == 2);
    CHECK(r.err.find("lattice span") != std::string::npos);
}

TEST_CASE("verify: Pareto passes and the exponential control fails") {
    const auto dir = std::filesystem::temp_directory_path() / "tailrisk_cli_test";
    std::filesystem::create_directories(dir);
    const auto out = (dir / "verify.csv").string();
    REQUIRE(run({"verify", "--config", config_dir + "/verify_pareto.json", "--out", out}).code == 0);
    const json s = json::parse(std::ifstream(dir / "verify.json"));
    for (const auto& p : s.at("probes")) {
        CHECK(p.at("pass").get<bool>());
        CHECK(p.at("note").get<std::string>().find("evidence, not proof") == 0);
    }
    const auto out2 = (dir / "verify_exp.csv").string();
    REQUIRE(run({"verify", "--config", config_dir + "/verify_exponential_control.json", "--out", out2}).code == 0);
    const json e = json::parse(std::ifstream(dir / "verify_exp.json"));
    CHECK_FALSE(e.at("probes")[0].at("pass").get<bool>());
    CHECK(e.at("probes")[1].at("pass").get<bool>());
}

TEST_CASE("validate-model") {
    const auto ok = run({"validate-model", "--config", config_dir + "/validate_fgm.json"});
    REQUIRE(ok.code == 0);
    const json j = json::parse(ok.out);
    CHECK(j.at("ok").get<bool>());
    CHECK(j.at("report").at("c").get<double>() == 0.5);

    const auto s = run({"validate-model", "--config", config_dir + "/validate_sarmanov_exp.json"});
    REQUIRE(s.code == 0);
    for (const auto& c : json::parse(s.out).at("report").at("checks")) {
        if (c.at("name").get<std::string>().rfind("centering", 0) == 0) {
            CHECK(std::abs(c.at("value").get<double>()) < 1e-8);
        }
    }

    json bad = json::parse(std::ifstream(config_dir + "/validate_fgm.json"));
    bad["dependence"]["theta"] = 1.0;
    const auto p = temp_file("theta1.json", bad.dump());
    const auto f = run({"validate-model", "--config", p.string()});
    CHECK(f.code == 2);
    CHECK_FALSE(json::parse(f.out).at("ok").get<bool>());
}

TEST_CASE("ruin: reruns are byte identical and chunk invariant") {
    json c = small_ruin_config();
    const auto p1 = temp_file("ruin1.json", c.dump());
    const auto a = run({"ruin", "--config", p1.string()});
    const auto b = run({"ruin", "--config", p1.string()});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.err == b.err);
    c["chunks"] = 8;
    const auto p8 = temp_file("ruin8.json", c.dump());
    const auto d = run({"ruin", "--config", p8.string()});
    REQUIRE(d.code == 0);
    CHECK(data_rows(a.out) == data_rows(d.out));
    // The summary carries the trigger histogram.
    const json s = json::parse(d.err);
    CHECK(s.at("rows")[0].at("trigger_histogram").size() == 3);
    // --seed overrides the config seed and shows in the header.
    const auto e = run({"ruin", "--config", p1.string(), "--seed", "6"});
    CHECK(e.out.find("# seed: 6") != std::string::npos);
    CHECK(data_rows(e.out) != data_rows(a.out));
}

TEST_CASE("ruin: n = 1 ratio consistent with the product-tail gap") {
    const auto r = run({"ruin", "--config", config_dir + "/ruin_n1.json"});
    REQUIRE(r.code == 0);
    const json s = json::parse(r.err);
    for (const auto& row : s.at("rows")) {
        if (row.at("x").get<double>() == 10.0) {
            const double ratio = row.at("ratio").get<double>();
            CHECK(std::abs(ratio - 0.0285625 / 0.02875) <= 4 * row.at("ratio_se").get<double>());
        }
    }
}

TEST_CASE("config hash depends on the content") {
    json a = small_ruin_config();
    json b = a;
    b["paths"] = 100001;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a) == config_hash(json::parse(a.dump())));
}
