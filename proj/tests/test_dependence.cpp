#include <cmath>

#include "doctest.h"
#include "tailrisk/dependence.hpp"
#include "tailrisk/diagnostics.hpp"

using namespace tailrisk;

namespace {

const Distribution pareto = Distribution::pareto(2, 1);
const Distribution two_point = Distribution::discrete({1, 2}, {0.5, 0.5});
const Distribution unif = Distribution::uniform(0.5, 1);

DependenceModel sarmanov_exp(double theta, const Distribution& F, const Distribution& G) {
    return DependenceModel::sarmanov(theta, KernelSpec::exp_x(F), KernelSpec::exp_y(G));
}

}  // namespace

TEST_CASE("lambda_fgm uses mid-distribution values at atoms") {
    CHECK(lambda_fgm(two_point, 1) == -0.5);
    CHECK(lambda_fgm(two_point, 2) == 0.5);
    CHECK(lambda_fgm(Distribution::uniform(0, 1), 0.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("h function") {
    const auto m = DependenceModel::fgm(0.5);
    CHECK(h_value(m, two_point, 1) == 0.75);
    CHECK(h_value(m, two_point, 2) == 1.25);
    CHECK(h_value(DependenceModel::fgm(0.0), two_point, 1) == 1.0);
    CHECK(h_value(DependenceModel::independent(), unif, 0.7) == 1.0);
    CHECK(0.5 * h_value(m, two_point, 1) + 0.5 * h_value(m, two_point, 2) == 1.0);
}

TEST_CASE("psi for Sarmanov kernels") {
    const auto ky = KernelSpec::exp_y(two_point);
    const double m = (std::exp(-1.0) + std::exp(-2.0)) / 2;
    CHECK(ky.centering == doctest::Approx(m).epsilon(1e-14));
    CHECK(psi_sarmanov(ky, two_point, 1) == doctest::Approx(0.1162721).epsilon(1e-6));
    CHECK(psi_sarmanov(ky, two_point, 1) == doctest::Approx(std::exp(-1.0) - m).epsilon(1e-14));

    const auto fy = KernelSpec::fgm(KernelRole::Y, unif);
    CHECK(psi_sarmanov(fy, unif, 0.75) == doctest::Approx(0.0).epsilon(1e-15));
    const auto fy2 = KernelSpec::fgm(KernelRole::Y, two_point);
    CHECK(psi_sarmanov(fy2, two_point, 2) == 0.5);

    CHECK_THROWS_AS(psi_sarmanov(ky, two_point, 1.5), std::domain_error);
    CHECK_THROWS_AS(psi_sarmanov(fy, unif, 2.0), std::domain_error);
}

TEST_CASE("FGM kernels reproduce the FGM model") {
    // Sarmanov with FGM kernels on both sides has the FGM h function.
    const auto s = DependenceModel::sarmanov(0.5, KernelSpec::fgm(KernelRole::X, pareto),
                                             KernelSpec::fgm(KernelRole::Y, two_point));
    const auto f = DependenceModel::fgm(0.5);
    for (double y : {1.0, 2.0}) {
        CHECK(h_value(s, two_point, y) == doctest::Approx(h_value(f, two_point, y)).epsilon(1e-15));
        for (double x : {1.5, 4.0, 10.0}) {
            CHECK(conditional_tail_given_y(s, pareto, two_point, x, y) ==
                  doctest::Approx(conditional_tail_given_y(f, pareto, two_point, x, y)).epsilon(1e-10));
        }
    }
}

TEST_CASE("validate: FGM") {
    const auto rep = validate(DependenceModel::fgm(0.5), pareto, unif);
    CHECK(rep.ok());
    CHECK(rep.c == 0.5);
    for (const auto& c : rep.checks) {
        CHECK(c.passed);
    }

    const auto bad = validate(DependenceModel::fgm(1.0), pareto, unif);
    CHECK_FALSE(bad.ok());
    REQUIRE(bad.find("boundary_atom") != nullptr);
    CHECK_FALSE(bad.find("boundary_atom")->passed);

    // theta = 1 with an atom at the left endpoint of G.
    const auto edge = validate(DependenceModel::fgm(1.0), pareto, two_point);
    CHECK(edge.ok());
    CHECK(edge.c == doctest::Approx(0.5));

    CHECK_THROWS_AS(DependenceModel::fgm(1.5), std::invalid_argument);
    CHECK_THROWS_AS(require_valid(DependenceModel::fgm(1.0), pareto, unif), ModelInvalidError);
}

TEST_CASE("validate: Sarmanov") {
    const auto zero = validate(sarmanov_exp(0.0, pareto, unif), pareto, unif);
    CHECK(zero.ok());

    const auto rep = validate(sarmanov_exp(0.5, pareto, unif), pareto, unif);
    CHECK(rep.ok());
    REQUIRE(rep.find("centering_x") != nullptr);
    CHECK(std::abs(rep.find("centering_x")->value) < 1e-8);
    CHECK(std::abs(rep.find("centering_y")->value) < 1e-8);
    // Exp kernel for X tends to -a, so d1 < 0: admitted with an advisory flag.
    REQUIRE(rep.find("d1_positive") != nullptr);
    CHECK(rep.find("d1_positive")->advisory);
    CHECK(rep.c > 0.0);

    // A huge theta breaks nonnegativity of the density factor.
    const auto big = validate(sarmanov_exp(200.0, pareto, unif), pareto, unif);
    CHECK_FALSE(big.ok());
}

TEST_CASE("validate: negative support of G") {
    const auto g = Distribution::uniform(0.0, 1.0);
    CHECK(validate(DependenceModel::fgm(0.3), pareto, g).ok());
    const auto neg = Distribution::shifted(unif, -1.0);
    CHECK_FALSE(validate(DependenceModel::fgm(0.3), pareto, neg).ok());
}

TEST_CASE("conditional tail examples") {
    const auto m = DependenceModel::fgm(0.5);
    CHECK(conditional_tail_given_y(m, pareto, two_point, 10, 1) == doctest::Approx(0.0075250).epsilon(1e-12));
    CHECK(conditional_tail_given_y(m, pareto, two_point, 5, 2) == doctest::Approx(0.0496).epsilon(1e-12));
    CHECK(conditional_tail_given_y(DependenceModel::fgm(0.0), pareto, two_point, 7, 2) == pareto.tail(7));
}

TEST_CASE("Sarmanov conditional tail integrates back to the marginal") {
    const auto m = sarmanov_exp(0.5, pareto, unif);
    for (double x : {1.5, 3.0, 20.0}) {
        const auto r = expectation(
            unif, [&](double y) { return conditional_tail_given_y(m, pareto, unif, x, y); }, -1e300, 1e300);
        CHECK(r.value == doctest::Approx(pareto.tail(x)).epsilon(1e-10));
    }
}

TEST_CASE("FGM conditional inverse") {
    CHECK(fgm_conditional_inverse(-0.25, 0.5) == doctest::Approx((5 - std::sqrt(17.0)) / 2).epsilon(1e-14));
    for (double w : {0.0, 0.1, 0.37, 0.9, 1.0}) {
        CHECK(fgm_conditional_inverse(0.0, w) == w);
    }
    // Cross-check by bisection on the conditional cdf.
    for (double k : {-1.0, -0.4, 0.3, 1.0}) {
        for (double w : {0.05, 0.5, 0.95}) {
            double lo = 0.0;
            double hi = 1.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (mid * (1 - k * (1 - mid)) < w ? lo : hi) = mid;
            }
            CHECK(fgm_conditional_inverse(k, w) == doctest::Approx(lo).epsilon(1e-12));
        }
    }
}

TEST_CASE("tilted law") {
    const auto t = tilted_g(DependenceModel::fgm(0.5), two_point);
    REQUIRE(t.discrete().has_value());
    CHECK(t.discrete()->atoms() == std::vector<double>{1, 2});
    CHECK(t.discrete()->atom_probs()[0] == 0.375);
    CHECK(t.discrete()->atom_probs()[1] == 0.625);
    CHECK(t.right_endpoint() == two_point.right_endpoint());

    const auto t0 = tilted_g(DependenceModel::fgm(0.0), unif);
    for (double y : {0.4, 0.6, 0.9}) {
        CHECK(t0.tail(y) == doctest::Approx(unif.tail(y)).epsilon(1e-15));
    }

    for (const auto& m : {DependenceModel::fgm(-0.9), DependenceModel::fgm(0.5), sarmanov_exp(0.5, pareto, unif)}) {
        const auto tu = tilted_g(m, unif);
        CHECK(tu.total_mass() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(tu.right_endpoint() == 1.0);
        // Nonincreasing tail.
        double prev = 2.0;
        for (double y = 0.5; y <= 1.0; y += 0.01) {
            CHECK(tu.tail(y) <= prev + 1e-15);
            prev = tu.tail(y);
        }
    }
}

TEST_CASE("FGM sampler: marginals and mean of h") {
    const auto m = DependenceModel::fgm(0.8);
    RandomStream rng(77);
    const int n = 100'000;
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    double hsum = 0.0;
    double hsq = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto s = sample_pair(m, pareto, unif, rng);
        xs[k] = s.x;
        ys[k] = s.y;
        CHECK(s.attempts == 1);
        const double h = h_value(m, unif, s.y);
        hsum += h;
        hsq += h * h;
    }
    CHECK(ks_distance(xs, [](double x) { return pareto.cdf(x); }) <= 0.01);
    CHECK(ks_distance(ys, [](double y) { return unif.cdf(y); }) <= 0.01);
    const double mean = hsum / n;
    const double sd = std::sqrt((hsq / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) <= 4 * sd);
}

TEST_CASE("FGM sampler joint survival matches the model") {
    const auto m = DependenceModel::fgm(0.8);
    RandomStream rng(3);
    const int n = 200'000;
    int both = 0;
    const double x0 = 2.0;
    const double y0 = 0.8;
    for (int k = 0; k < n; ++k) {
        const auto s = sample_pair(m, pareto, unif, rng);
        both += (s.x > x0 && s.y > y0) ? 1 : 0;
    }
    const double fb = pareto.tail(x0);
    const double gb = unif.tail(y0);
    const double truth = fb * gb * (1 + 0.8 * (1 - fb) * (1 - gb));
    const double sd = std::sqrt(truth * (1 - truth) / n);
    CHECK(std::abs(static_cast<double>(both) / n - truth) <= 4 * sd);
}

TEST_CASE("Sarmanov sampler: centering and acceptance rate") {
    const auto m = sarmanov_exp(0.5, pareto, unif);
    const auto& s = std::get<dependence::Sarmanov>(m.kind());
    RandomStream rng(11);
    const int n = 100'000;
    double p1 = 0.0;
    double p1q = 0.0;
    double p2 = 0.0;
    double p2q = 0.0;
    long attempts = 0;
    for (int k = 0; k < n; ++k) {
        const auto d = sample_pair(m, pareto, unif, rng);
        const double a = s.kernel_x(pareto, d.x);
        const double b = s.kernel_y(unif, d.y);
        p1 += a;
        p1q += a * a;
        p2 += b;
        p2q += b * b;
        attempts += d.attempts;
    }
    auto within = [n](double sum, double sq) {
        const double mean = sum / n;
        const double sd = std::sqrt((sq / n - mean * mean) / n);
        return std::abs(mean) <= 4 * sd;
    };
    CHECK(within(p1, p1q));
    CHECK(within(p2, p2q));
    const double rate = static_cast<double>(n) / static_cast<double>(attempts);
    const double truth = 1.0 / (1.0 + 0.5 * s.kernel_x.sup_abs() * s.kernel_y.sup_abs());
    const double sd = std::sqrt(truth * (1 - truth) / static_cast<double>(attempts));
    CHECK(std::abs(rate - truth) <= 3 * sd);
}

TEST_CASE("Sarmanov with theta = 0 accepts every proposal") {
    const auto m = sarmanov_exp(0.0, pareto, unif);
    RandomStream rng(1);
    for (int k = 0; k < 1000; ++k) {
        CHECK(sample_pair(m, pareto, unif, rng).attempts == 1);
    }
}

TEST_CASE("sampling is deterministic per stream") {
    const auto m = DependenceModel::fgm(0.5);
    RandomStream a(42, 7);
    RandomStream b(42, 7);
    for (int k = 0; k < 100; ++k) {
        const auto p = sample_pair(m, pareto, two_point, a);
        const auto q = sample_pair(m, pareto, two_point, b);
        CHECK(p.x == q.x);
        CHECK(p.y == q.y);
    }
}

TEST_CASE("dependence JSON round trip") {
    const auto f = DependenceModel::fgm(0.5);
    const auto back = DependenceModel::from_json(f.to_json(), pareto, unif);
    CHECK(back.kind_name() == "fgm");
    CHECK(back.theta() == 0.5);
    const auto s = sarmanov_exp(0.25, pareto, unif);
    const auto sb = DependenceModel::from_json(s.to_json(), pareto, unif);
    CHECK(sb.to_json() == s.to_json());
    CHECK_THROWS_AS(DependenceModel::from_json({{"kind", "clayton"}}, pareto, unif), std::invalid_argument);
}
