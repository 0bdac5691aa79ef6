// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "tailrisk/cli.hpp"
#include "tailrisk/diagnostics.hpp"
#include "tailrisk/product_tail.hpp"
#include "tailrisk/ruin_engine.hpp"

using namespace tailrisk;
using nlohmann::json;

namespace {

const Distribution pareto = Distribution::pareto(2, 1);
const Distribution two_point = Distribution::discrete({1, 2}, {0.5, 0.5});
const Distribution unif = Distribution::uniform(0.5, 1);

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v, int digits = 7) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

// Conditional decomposition of the two-point FGM product tail:
// P(XY > x) = 1/2 P(X > x | Y = 1) + 1/2 P(X > x / 2 | Y = 2), with
// P(X > t | Y = y) = Fbar(t) (1 + theta F(t) lambda(y)), lambda(1) = -1/2, lambda(2) = 1/2.
double decomposition_oracle(double theta, double x) {
    auto fbar = [](double t) { return t <= 1 ? 1.0 : 1.0 / (t * t); };
    const double a = fbar(x);
    const double b = fbar(x / 2);
    return 0.5 * a * (1 - 0.5 * theta * (1 - a)) + 0.5 * b * (1 + 0.5 * theta * (1 - b));
}

Outcome criterion1() {
    Outcome o;
    const double v10 = exact_two_point_fgm_tail(pareto, 0.5, 10);
    const double v4 = exact_two_point_fgm_tail(pareto, 0.5, 4);
    o.require(std::abs(v10 - 0.0285625) <= 5e-8, "value at 10");
    o.require(std::abs(v4 - 0.1723633) <= 5e-8, "value at 4");
    o.require(std::abs(v10 - decomposition_oracle(0.5, 10)) <= 1e-12, "oracle at 10");
    o.require(std::abs(v4 - decomposition_oracle(0.5, 4)) <= 1e-12, "oracle at 4");
    for (double x : {4.0, 10.0}) {
        RandomStream rng(20240601, static_cast<std::uint64_t>(x));
        const auto e = mc_product_tail(DependenceModel::fgm(0.5), pareto, two_point, 1, x, 1'000'000, rng);
        const double exact = exact_two_point_fgm_tail(pareto, 0.5, x);
        const double z = (e.p_hat - exact) / e.std_err;
        o.require(std::abs(z) <= 4.0, "MC at " + num(x));
        o.note("x=" + num(x) + " exact=" + num(exact) + " mc=" + num(e.p_hat) + " z=" + num(z, 3));
    }
    return o;
}

Outcome criterion2() {
    Outcome o;
    const auto m = DependenceModel::fgm(0.5);
    auto gap = [&](double x) {
        return std::abs(exact_two_point_fgm_tail(pareto, 0.5, x) / h_integral_tail(pareto, two_point, m, x) - 1);
    };
    const double g10 = gap(10);
    o.require(std::abs(g10 * 100 - 0.652) < 0.0005, "gap at 10 to 3 significant figures");
    o.note("gap(10)=" + num(100 * g10, 6) + "%");
    double prev = INFINITY;
    for (double x : {4.0, 10.0, 40.0, 100.0}) {
        const double g = gap(x);
        o.require(g < prev, "monotone decrease at " + num(x));
        prev = g;
    }
    return o;
}

Outcome criterion3() {
    Outcome o;
    double worst = 0.0;
    for (double theta : {-0.9, 0.0, 0.5}) {
        const auto m = DependenceModel::fgm(theta);
        for (const auto* g : {&two_point, &unif}) {
            const auto t = tilted_g(m, *g);
            for (int k = 0; k < 50; ++k) {
                const double x = 1.05 * std::pow(2000.0 / 1.05, k / 49.0);
                const double a = h_integral_tail(pareto, *g, m, x);
                const double b = h_integral_tail_tilted(pareto, t, x);
                worst = std::max(worst, std::abs(a / b - 1));
            }
        }
    }
    o.require(worst <= 1e-10, "relative agreement 1e-10");
    o.note("max relative difference " + num(worst, 3));
    return o;
}

Outcome criterion4() {
    Outcome o;
    double worst = 0.0;
    for (double x : {2.0, 10.0, 100.0}) {
        const double v = h_integral_tail(pareto, unif, DependenceModel::independent(), x);
        worst = std::max(worst, std::abs(v / (7.0 / 12.0 / (x * x)) - 1));
    }
    o.require(worst <= 1e-8, "closed form within 1e-8");
    o.note("max relative error " + num(worst, 3));
    return o;
}

Outcome criterion5() {
    Outcome o;
    const RiskModelSpec spec(Distribution::shifted(pareto, -1), Distribution::discrete({0.5, 0.9}, {0.5, 0.5}),
                             DependenceModel::fgm(0.5), 3);
    std::vector<double> grid;
    for (int k = 0; k < 31; ++k) {
        grid.push_back(std::pow(10.0, -0.5 + 3.0 * k / 30.0));  // 0.316 .. 316
    }
    const auto rows = compare_ruin(spec, grid, 10'000'000, 20240605, 1);
    // Largest x with relative MC error <= 5%.
    const RuinComparisonRow* last = nullptr;
    for (const auto& r : rows) {
        if (r.mc.p_hat > 0 && r.mc.std_err / r.mc.p_hat <= 0.05) {
            last = &r;
        }
    }
    if (last == nullptr) {
        o.require(false, "no grid point with relative error <= 5%");
        return o;
    }
    o.require(last->ratio >= 0.85 && last->ratio <= 1.15, "ratio in [0.85, 1.15] at the largest resolved x");
    o.note("largest resolved x=" + num(last->mc.x, 4) + " psi=" + num(last->mc.p_hat, 4) +
           " ratio=" + num(last->ratio, 4) + "+-" + num(last->ratio_se, 2));
    auto nearest = [&](double level) {
        const RuinComparisonRow* best = &rows.front();
        for (const auto& r : rows) {
            if (r.mc.p_hat > 0 && std::abs(std::log(r.mc.p_hat / level)) < std::abs(std::log(best->mc.p_hat / level))) {
                best = &r;
            }
        }
        return best;
    };
    const auto* deep = nearest(1e-3);
    const auto* shallow = nearest(1e-1);
    const double slack = 2.0 * std::hypot(deep->ratio_se, shallow->ratio_se);
    o.require(std::abs(deep->ratio - 1) <= std::abs(shallow->ratio - 1) + slack, "trend toward 1");
    o.note("ratio at psi~1e-1 (x=" + num(shallow->mc.x, 3) + ")=" + num(shallow->ratio, 4) + ", at psi~1e-3 (x=" +
           num(deep->mc.x, 3) + ")=" + num(deep->ratio, 4));
    return o;
}

Outcome criterion6() {
    Outcome o;
    const auto m = DependenceModel::fgm(0.5);
    const RiskModelSpec spec(pareto, two_point, m, 1);
    for (double x : {1.5, 4.0, 10.0, 40.0}) {
        o.require(std::abs(asymptotic_ruin(spec, x).value - iterated_tail(pareto, two_point, m, 1, x).value) <= 1e-14,
                  "asymptotic sum equals H1 at " + num(x));
    }
    const auto e = estimate_ruin(spec, {4, 10}, 1'000'000, 606);
    for (std::size_t k = 0; k < 2; ++k) {
        const double exact = exact_two_point_fgm_tail(pareto, 0.5, e[k].x);
        const double z = (e[k].p_hat - exact) / e[k].std_err;
        o.require(std::abs(z) <= 4, "MC ruin at " + num(e[k].x));
        o.note("x=" + num(e[k].x) + " z=" + num(z, 3));
    }
    return o;
}

Outcome criterion7() {
    Outcome o;
    const int n = 100'000;
    {
        const auto m = DependenceModel::fgm(0.8);
        RandomStream rng(707);
        std::vector<double> xs(n);
        std::vector<double> ys(n);
        double s = 0.0;
        double sq = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto p = sample_pair(m, pareto, unif, rng);
            xs[k] = p.x;
            ys[k] = p.y;
            const double h = h_value(m, unif, p.y);
            s += h;
            sq += h * h;
        }
        const double kx = ks_distance(xs, [](double x) { return pareto.cdf(x); });
        const double ky = ks_distance(ys, [](double y) { return unif.cdf(y); });
        o.require(kx <= 0.01 && ky <= 0.01, "FGM marginal KS <= 0.01");
        const double mean = s / n;
        const double sd = std::sqrt((sq / n - mean * mean) / n);
        o.require(std::abs(mean - 1) <= 4 * sd, "E h(Y) = 1 within 4 sigma");
        o.note("FGM KS=(" + num(kx, 3) + "," + num(ky, 3) + ") mean h=" + num(mean, 6));
    }
    {
        const auto m = DependenceModel::sarmanov(0.5, KernelSpec::exp_x(pareto), KernelSpec::exp_y(unif));
        const auto& sm = std::get<dependence::Sarmanov>(m.kind());
        RandomStream rng(708);
        double a = 0.0;
        double aq = 0.0;
        double b = 0.0;
        double bq = 0.0;
        long attempts = 0;
        for (int k = 0; k < n; ++k) {
            const auto p = sample_pair(m, pareto, unif, rng);
            const double u = sm.kernel_x(pareto, p.x);
            const double v = sm.kernel_y(unif, p.y);
            a += u;
            aq += u * u;
            b += v;
            bq += v * v;
            attempts += p.attempts;
        }
        auto z = [n](double sum, double sq) {
            const double mean = sum / n;
            return mean / std::sqrt((sq / n - mean * mean) / n);
        };
        o.require(std::abs(z(a, aq)) <= 4 && std::abs(z(b, bq)) <= 4, "Sarmanov kernel means within 4 sigma");
        const double rate = static_cast<double>(n) / static_cast<double>(attempts);
        const double truth = 1.0 / (1.0 + 0.5 * sm.kernel_x.sup_abs() * sm.kernel_y.sup_abs());
        const double sd = std::sqrt(truth * (1 - truth) / static_cast<double>(attempts));
        o.require(std::abs(rate - truth) <= 3 * sd, "acceptance rate within 3 sigma");
        o.note("Sarmanov acceptance " + num(rate, 5) + " vs " + num(truth, 5));
    }
    return o;
}

Outcome criterion8() {
    Outcome o;
    const auto p = long_tail_ratio(pareto, 0, 1, {1000});
    o.require(p[0].deviation < 0.01, "Pareto L(0) deviation < 1% at 1e3");
    const auto l = long_tail_ratio(Distribution::light_long_tail(1), 1, 1, {2000});
    o.require(std::abs(l[0].ratio / std::numbers::e - 1) < 0.002, "LightLongTail(1) within 0.2% of e at 2000");
    const auto e = summarize_probe("exp", long_tail_ratio(Distribution::exponential(1), 0, 1, {10, 100, 1000}), 0.01);
    o.require(!e.pass, "Exponential negative control fails the gamma = 0 probe");
    o.require(std::abs(e.points.back().ratio - std::numbers::e) < 1e-12, "Exponential ratio equals e");
    const auto c = convolution_tail_ratio(pareto, 0, {100, 1000});
    o.require(std::abs(c.points[1].ratio / 2 - 1) < 0.1, "convolution ratio within 10% of 2 at 1e3");
    o.require(c.points[0].ratio > c.points[1].ratio && c.points[1].ratio > 2.0, "decreasing toward 2");
    o.note("Pareto dev=" + num(p[0].deviation, 3) + " LLT ratio=" + num(l[0].ratio, 6) + " conv=(" +
           num(c.points[0].ratio, 5) + "," + num(c.points[1].ratio, 5) + ")");
    return o;
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
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

Outcome criterion9() {
    Outcome o;
    const std::string dir = TAILRISK_CONFIG_DIR;
    const auto tmp = std::filesystem::temp_directory_path() / "tailrisk_acceptance";
    std::filesystem::create_directories(tmp);

    json ruin = json::parse(std::ifstream(dir + "/ruin_shifted_pareto.json"));
    ruin["paths"] = 300'000;
    std::vector<std::string> ruin_files;
    for (int chunks : {1, 4, 8}) {
        ruin["chunks"] = chunks;
        const auto p = tmp / ("ruin_" + std::to_string(chunks) + ".json");
        std::ofstream(p) << ruin.dump(2);
        ruin_files.push_back(p.string());
    }
    json product = json::parse(std::ifstream(dir + "/example_two_point_fgm.json"));
    product["paths"] = 200'000;
    const auto pp = tmp / "product.json";
    std::ofstream(pp) << product.dump(2);

    const std::vector<std::vector<std::string>> commands{
        {"product-tail", "--config", pp.string()},
        {"ruin", "--config", ruin_files[0]},
        {"verify", "--config", dir + "/verify_pareto.json"},
        {"validate-model", "--config", dir + "/validate_sarmanov_exp.json"},
    };
    for (const auto& args : commands) {
        const auto a = cli(args);
        const auto b = cli(args);
        o.require(a.code == 0 && b.code == 0, args[0] + " exit code");
        o.require(a.out == b.out && a.err == b.err, args[0] + " byte-identical rerun");
    }
    // Same command through files.
    const auto f1 = (tmp / "r1.csv").string();
    const auto f2 = (tmp / "r2.csv").string();
    cli({"ruin", "--config", ruin_files[0], "--out", f1});
    cli({"ruin", "--config", ruin_files[0], "--out", f2});
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    o.require(!slurp(f1).empty() && slurp(f1) == slurp(f2), "ruin output files identical");
    o.require(slurp(tmp / "r1.json") == slurp(tmp / "r2.json"), "ruin summaries identical");

    const std::string base = data_rows(cli({"ruin", "--config", ruin_files[0]}).out);
    for (std::size_t k = 1; k < ruin_files.size(); ++k) {
        o.require(data_rows(cli({"ruin", "--config", ruin_files[k]}).out) == base, "chunk invariance");
    }
    o.note("4 commands rerun identically; ruin rows equal for chunks 1, 4, 8");
    return o;
}

Outcome criterion10() {
    Outcome o;
    const double exact = exact_two_point_fgm_tail(pareto, 0.5, 10);
    const auto m = DependenceModel::fgm(0.5);
    int covered = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        RandomStream rng(1000 + static_cast<std::uint64_t>(r));
        const auto e = mc_product_tail(m, pareto, two_point, 1, 10, 1'000'000, rng);
        covered += e.covers(exact) ? 1 : 0;
    }
    const double rate = static_cast<double>(covered) / reps;
    o.require(rate >= 0.90, "coverage >= 90%");
    o.note("coverage " + std::to_string(covered) + "/" + std::to_string(reps));
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria{
        {1, "two-point FGM exact tail", criterion1, 5.0},
        {2, "asymptotic gap of the h-integral", criterion2, 1.0},
        {3, "tilted-measure equivalence", criterion3, 0.0},
        {4, "independence closed form", criterion4, 0.0},
        {5, "finite-time ruin study", criterion5, 60.0},
        {6, "single-period consistency", criterion6, 0.0},
        {7, "sampler fidelity", criterion7, 0.0},
        {8, "class probes", criterion8, 0.0},
        {9, "determinism", criterion9, 0.0},
        {10, "confidence interval calibration", criterion10, 0.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0.0) {
            o.require(secs < c.budget_s, "runtime budget " + num(c.budget_s, 3) + " s");
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %2d %s: %s (%.2f s) %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
