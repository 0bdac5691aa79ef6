#include "tailrisk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace tailrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

// log(erfc(z) / 2), continued asymptotically where erfc underflows.
double log_half_erfc(double z) {
    if (z < 20.0) {
        return std::log(0.5 * std::erfc(z));
    }
    const double z2 = z * z;
    const double inv = 1.0 / (2.0 * z2);
    // erfc(z) ~ exp(-z^2) / (z sqrt(pi)) * (1 - 1/(2z^2) + 3/(4z^4) - 15/(8z^6))
    const double series = 1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv;
    return std::log(0.5) - z2 - std::log(z * std::sqrt(std::numbers::pi)) + std::log(series);
}

double llt_log_tail(double gamma, double x) { return -gamma * x - 2.0 * std::log1p(x); }

// Root of log_tail(x) = log(q) for the LightLongTail family. The log-tail is
// convex and decreasing, so Newton from x = 0 increases monotonically to it.
double llt_tail_quantile(double gamma, double q) {
    if (q >= 1.0) {
        return 0.0;
    }
    if (q <= 0.0) {
        return kInf;
    }
    const double target = std::log(q);
    double x = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double f = llt_log_tail(gamma, x) - target;
        const double df = -gamma - 2.0 / (1.0 + x);
        const double step = f / df;
        x -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, x)) {
            break;
        }
    }
    return x;
}

}  // namespace

Distribution Distribution::pareto(double alpha, double xm) {
    require(alpha > 0.0 && std::isfinite(alpha), "pareto: alpha must be positive");
    require(xm > 0.0 && std::isfinite(xm), "pareto: xm must be positive");
    return Distribution(family::Pareto{alpha, xm});
}

Distribution Distribution::weibull(double shape, double scale) {
    require(shape > 0.0 && shape < 1.0, "weibull: shape must lie in (0, 1) (heavy-tailed Weibull only)");
    require(scale > 0.0 && std::isfinite(scale), "weibull: scale must be positive");
    return Distribution(family::Weibull{shape, scale});
}

Distribution Distribution::lognormal(double mu, double sigma) {
    require(std::isfinite(mu), "lognormal: mu must be finite");
    require(sigma > 0.0 && std::isfinite(sigma), "lognormal: sigma must be positive");
    return Distribution(family::Lognormal{mu, sigma});
}

Distribution Distribution::exponential(double rate) {
    require(rate > 0.0 && std::isfinite(rate), "exponential: rate must be positive");
    return Distribution(family::Exponential{rate});
}

Distribution Distribution::uniform(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b) && a < b, "uniform: need a < b");
    require(a >= 0.0, "uniform: need a >= 0");
    return Distribution(family::Uniform{a, b});
}

Distribution Distribution::discrete(std::vector<double> atoms, std::vector<double> probs) {
    require(!atoms.empty() && atoms.size() == probs.size(), "discrete: atoms and probs must be non-empty and equal length");
    double total = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        require(std::isfinite(atoms[k]), "discrete: atoms must be finite");
        require(probs[k] > 0.0 && probs[k] <= 1.0, "discrete: probabilities must lie in (0, 1]");
        if (k > 0) {
            require(atoms[k] > atoms[k - 1], "discrete: atoms must be strictly increasing");
        }
        total += probs[k];
    }
    require(std::abs(total - 1.0) <= 1e-12, "discrete: probabilities must sum to 1 within 1e-12");
    std::vector<double> suffix(atoms.size() + 1, 0.0);
    for (std::size_t k = atoms.size(); k-- > 0;) {
        suffix[k] = suffix[k + 1] + probs[k];
    }
    return Distribution(family::DiscreteFinite{std::move(atoms), std::move(probs), std::move(suffix)});
}

Distribution Distribution::light_long_tail(double gamma) {
    require(gamma > 0.0 && std::isfinite(gamma), "light_long_tail: gamma must be positive");
    return Distribution(family::LightLongTail{gamma});
}

Distribution Distribution::shifted(const Distribution& inner, double shift) {
    require(std::isfinite(shift), "shifted: shift must be finite");
    if (const auto* s = std::get_if<family::Shifted>(&inner.family_)) {
        return Distribution(family::Shifted{s->inner, s->shift + shift});
    }
    return Distribution(family::Shifted{std::make_shared<const Distribution>(inner), shift});
}

std::string Distribution::family_name() const {
    return std::visit(Overloaded{
                          [](const family::Pareto&) { return std::string("pareto"); },
                          [](const family::Weibull&) { return std::string("weibull"); },
                          [](const family::Lognormal&) { return std::string("lognormal"); },
                          [](const family::Exponential&) { return std::string("exponential"); },
                          [](const family::Uniform&) { return std::string("uniform"); },
                          [](const family::DiscreteFinite&) { return std::string("discrete"); },
                          [](const family::LightLongTail&) { return std::string("light_long_tail"); },
                          [](const family::Shifted& s) { return s.inner->family_name(); },
                      },
                      family_);
}

double Distribution::tail(double x) const {
    return std::visit(
        Overloaded{
            [x](const family::Pareto& d) { return x <= d.xm ? 1.0 : std::pow(d.xm / x, d.alpha); },
            [x](const family::Weibull& d) { return x <= 0.0 ? 1.0 : std::exp(-std::pow(x / d.scale, d.shape)); },
            [x](const family::Lognormal& d) {
                if (x <= 0.0) {
                    return 1.0;
                }
                return 0.5 * std::erfc((std::log(x) - d.mu) / (d.sigma * std::numbers::sqrt2));
            },
            [x](const family::Exponential& d) { return x <= 0.0 ? 1.0 : std::exp(-d.rate * x); },
            [x](const family::Uniform& d) {
                if (x <= d.a) {
                    return 1.0;
                }
                if (x >= d.b) {
                    return 0.0;
                }
                return (d.b - x) / (d.b - d.a);
            },
            [x](const family::DiscreteFinite& d) {
                const auto k = std::upper_bound(d.atoms.begin(), d.atoms.end(), x) - d.atoms.begin();
                return k == 0 ? 1.0 : d.suffix[static_cast<std::size_t>(k)];
            },
            [x](const family::LightLongTail& d) { return x <= 0.0 ? 1.0 : std::exp(llt_log_tail(d.gamma, x)); },
            [x](const family::Shifted& s) { return s.inner->tail(x - s.shift); },
        },
        family_);
}

double Distribution::log_tail(double x) const {
    return std::visit(
        Overloaded{
            [x](const family::Pareto& d) { return x <= d.xm ? 0.0 : d.alpha * (std::log(d.xm) - std::log(x)); },
            [x](const family::Weibull& d) { return x <= 0.0 ? 0.0 : -std::pow(x / d.scale, d.shape); },
            [x](const family::Lognormal& d) {
                if (x <= 0.0) {
                    return 0.0;
                }
                return log_half_erfc((std::log(x) - d.mu) / (d.sigma * std::numbers::sqrt2));
            },
            [x](const family::Exponential& d) { return x <= 0.0 ? 0.0 : -d.rate * x; },
            [this, x](const family::Uniform&) { return std::log(tail(x)); },
            [this, x](const family::DiscreteFinite&) { return std::log(tail(x)); },
            [x](const family::LightLongTail& d) { return x <= 0.0 ? 0.0 : llt_log_tail(d.gamma, x); },
            [x](const family::Shifted& s) { return s.inner->log_tail(x - s.shift); },
        },
        family_);
}

double Distribution::cdf_left(double x) const {
    if (const auto* d = std::get_if<family::DiscreteFinite>(&family_)) {
        const auto k = std::lower_bound(d->atoms.begin(), d->atoms.end(), x) - d->atoms.begin();
        return k == 0 ? 0.0 : 1.0 - d->suffix[static_cast<std::size_t>(k)];
    }
    if (const auto* s = std::get_if<family::Shifted>(&family_)) {
        return s->inner->cdf_left(x - s->shift);
    }
    return cdf(x);
}

double Distribution::atom_mass(double x) const {
    if (const auto* d = std::get_if<family::DiscreteFinite>(&family_)) {
        const auto it = std::lower_bound(d->atoms.begin(), d->atoms.end(), x);
        return (it != d->atoms.end() && *it == x) ? d->probs[static_cast<std::size_t>(it - d->atoms.begin())] : 0.0;
    }
    if (const auto* s = std::get_if<family::Shifted>(&family_)) {
        return s->inner->atom_mass(x - s->shift);
    }
    return 0.0;
}

double Distribution::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::domain_error("quantile: probability must lie in [0, 1]");
    }
    return std::visit(
        Overloaded{
            [p](const family::Pareto& d) { return p >= 1.0 ? kInf : d.xm * std::pow(1.0 - p, -1.0 / d.alpha); },
            [p](const family::Weibull& d) {
                return p >= 1.0 ? kInf : d.scale * std::pow(-std::log1p(-p), 1.0 / d.shape);
            },
            [p](const family::Lognormal& d) {
                if (p <= 0.0) {
                    return 0.0;
                }
                if (p >= 1.0) {
                    return kInf;
                }
                return std::exp(d.mu - d.sigma * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p));
            },
            [p](const family::Exponential& d) { return p >= 1.0 ? kInf : -std::log1p(-p) / d.rate; },
            [p](const family::Uniform& d) { return d.a + p * (d.b - d.a); },
            [p](const family::DiscreteFinite& d) {
                // First atom whose cdf 1 - suffix[k+1] reaches p.
                for (std::size_t k = 0; k < d.atoms.size(); ++k) {
                    if (1.0 - d.suffix[k + 1] >= p) {
                        return d.atoms[k];
                    }
                }
                return d.atoms.back();
            },
            [p](const family::LightLongTail& d) { return llt_tail_quantile(d.gamma, 1.0 - p); },
            [p](const family::Shifted& s) { return s.inner->quantile(p) + s.shift; },
        },
        family_);
}

double Distribution::tail_quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::domain_error("tail_quantile: probability must lie in [0, 1]");
    }
    return std::visit(
        Overloaded{
            [q](const family::Pareto& d) { return q <= 0.0 ? kInf : d.xm * std::pow(q, -1.0 / d.alpha); },
            [q](const family::Weibull& d) {
                return q <= 0.0 ? kInf : d.scale * std::pow(-std::log(q), 1.0 / d.shape);
            },
            [q](const family::Lognormal& d) {
                if (q <= 0.0) {
                    return kInf;
                }
                if (q >= 1.0) {
                    return 0.0;
                }
                return std::exp(d.mu + d.sigma * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q));
            },
            [q](const family::Exponential& d) { return q <= 0.0 ? kInf : -std::log(q) / d.rate; },
            [q](const family::Uniform& d) { return d.b - q * (d.b - d.a); },
            [q](const family::DiscreteFinite& d) {
                for (std::size_t k = 0; k < d.atoms.size(); ++k) {
                    if (d.suffix[k + 1] <= q) {
                        return d.atoms[k];
                    }
                }
                return d.atoms.back();
            },
            [q](const family::LightLongTail& d) { return llt_tail_quantile(d.gamma, q); },
            [q](const family::Shifted& s) { return s.inner->tail_quantile(q) + s.shift; },
        },
        family_);
}

double Distribution::pdf(double x) const {
    return std::visit(
        Overloaded{
            [x](const family::Pareto& d) { return x < d.xm ? 0.0 : d.alpha / x * std::pow(d.xm / x, d.alpha); },
            [x](const family::Weibull& d) {
                if (x <= 0.0) {
                    return 0.0;
                }
                const double z = std::pow(x / d.scale, d.shape);
                return d.shape / x * z * std::exp(-z);
            },
            [x](const family::Lognormal& d) {
                if (x <= 0.0) {
                    return 0.0;
                }
                const double z = (std::log(x) - d.mu) / d.sigma;
                return std::exp(-0.5 * z * z) / (x * d.sigma * std::sqrt(2.0 * std::numbers::pi));
            },
            [x](const family::Exponential& d) { return x < 0.0 ? 0.0 : d.rate * std::exp(-d.rate * x); },
            [x](const family::Uniform& d) { return (x < d.a || x > d.b) ? 0.0 : 1.0 / (d.b - d.a); },
            [](const family::DiscreteFinite&) -> double {
                throw std::logic_error("pdf: discrete law has no density");
            },
            [x](const family::LightLongTail& d) {
                if (x < 0.0) {
                    return 0.0;
                }
                return std::exp(llt_log_tail(d.gamma, x)) * (d.gamma + 2.0 / (1.0 + x));
            },
            [x](const family::Shifted& s) { return s.inner->pdf(x - s.shift); },
        },
        family_);
}

double Distribution::sample(RandomStream& rng) const { return quantile(rng.uniform()); }

double Distribution::right_endpoint() const {
    return std::visit(Overloaded{
                          [](const family::Uniform& d) { return d.b; },
                          [](const family::DiscreteFinite& d) { return d.atoms.back(); },
                          [](const family::Shifted& s) { return s.inner->right_endpoint() + s.shift; },
                          [](const auto&) { return kInf; },
                      },
                      family_);
}

double Distribution::left_endpoint() const {
    return std::visit(Overloaded{
                          [](const family::Pareto& d) { return d.xm; },
                          [](const family::Uniform& d) { return d.a; },
                          [](const family::DiscreteFinite& d) { return d.atoms.front(); },
                          [](const family::Shifted& s) { return s.inner->left_endpoint() + s.shift; },
                          [](const auto&) { return 0.0; },
                      },
                      family_);
}

double Distribution::exp_moment(double gamma) const {
    if (!(gamma >= 0.0)) {
        throw std::domain_error("exp_moment: gamma must be >= 0");
    }
    if (gamma == 0.0) {
        return 1.0;
    }
    return std::visit(
        Overloaded{
            [](const family::Pareto&) { return kInf; },
            [](const family::Weibull&) { return kInf; },
            [](const family::Lognormal&) { return kInf; },
            [gamma](const family::Exponential& d) { return gamma < d.rate ? d.rate / (d.rate - gamma) : kInf; },
            [gamma](const family::Uniform& d) {
                const double w = gamma * (d.b - d.a);
                return std::exp(gamma * d.a) * std::expm1(w) / w;
            },
            [gamma](const family::DiscreteFinite& d) {
                double s = 0.0;
                for (std::size_t k = 0; k < d.atoms.size(); ++k) {
                    s += d.probs[k] * std::exp(gamma * d.atoms[k]);
                }
                return s;
            },
            [gamma](const family::LightLongTail& d) {
                // E e^{gX} = 1 + g * int_0^inf e^{gx} tail(x) dx for X >= 0.
                if (gamma > d.gamma) {
                    return kInf;
                }
                if (gamma == d.gamma) {
                    return 1.0 + gamma;
                }
                const double rate = d.gamma - gamma;
                const QuadResult r = integrate_to_infinity(
                    [rate](double x) { return std::exp(-rate * x) / ((1.0 + x) * (1.0 + x)); }, 0.0);
                return 1.0 + gamma * r.value;
            },
            [gamma](const family::Shifted& s) {
                const double inner = s.inner->exp_moment(gamma);
                return std::isinf(inner) ? kInf : std::exp(gamma * s.shift) * inner;
            },
        },
        family_);
}

std::optional<double> Distribution::lattice_span() const {
    if (const auto* s = std::get_if<family::Shifted>(&family_)) {
        return s->inner->lattice_span();
    }
    const auto* d = std::get_if<family::DiscreteFinite>(&family_);
    if (d == nullptr || d->atoms.size() < 2) {
        return std::nullopt;
    }
    const double span = d->atoms[1] - d->atoms[0];
    for (std::size_t k = 2; k < d->atoms.size(); ++k) {
        if (d->atoms[k] - d->atoms[k - 1] != span) {
            return std::nullopt;
        }
    }
    return span;
}

bool Distribution::is_discrete() const {
    if (const auto* s = std::get_if<family::Shifted>(&family_)) {
        return s->inner->is_discrete();
    }
    return std::holds_alternative<family::DiscreteFinite>(family_);
}

std::vector<double> Distribution::atoms() const {
    if (const auto* s = std::get_if<family::Shifted>(&family_)) {
        auto a = s->inner->atoms();
        for (double& v : a) {
            v += s->shift;
        }
        return a;
    }
    if (const auto* d = std::get_if<family::DiscreteFinite>(&family_)) {
        return d->atoms;
    }
    return {};
}

std::vector<double> Distribution::atom_probs() const {
    if (const auto* s = std::get_if<family::Shifted>(&family_)) {
        return s->inner->atom_probs();
    }
    if (const auto* d = std::get_if<family::DiscreteFinite>(&family_)) {
        return d->probs;
    }
    return {};
}

nlohmann::json Distribution::to_json() const {
    using nlohmann::json;
    return std::visit(Overloaded{
                          [](const family::Pareto& d) {
                              return json{{"family", "pareto"}, {"params", {{"alpha", d.alpha}, {"xm", d.xm}}}};
                          },
                          [](const family::Weibull& d) {
                              return json{{"family", "weibull"},
                                          {"params", {{"shape", d.shape}, {"scale", d.scale}}}};
                          },
                          [](const family::Lognormal& d) {
                              return json{{"family", "lognormal"}, {"params", {{"mu", d.mu}, {"sigma", d.sigma}}}};
                          },
                          [](const family::Exponential& d) {
                              return json{{"family", "exponential"}, {"params", {{"rate", d.rate}}}};
                          },
                          [](const family::Uniform& d) {
                              return json{{"family", "uniform"}, {"params", {{"a", d.a}, {"b", d.b}}}};
                          },
                          [](const family::DiscreteFinite& d) {
                              return json{{"family", "discrete"},
                                          {"params", {{"atoms", d.atoms}, {"probs", d.probs}}}};
                          },
                          [](const family::LightLongTail& d) {
                              return json{{"family", "light_long_tail"}, {"params", {{"gamma", d.gamma}}}};
                          },
                          [](const family::Shifted& s) {
                              json j = s.inner->to_json();
                              j["shift"] = s.shift;
                              return j;
                          },
                      },
                      family_);
}

Distribution Distribution::from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("family"), "distribution: expected an object with a \"family\" field");
    const std::string name = j.at("family").get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    auto num = [&](const char* key) {
        require(params.contains(key) && params.at(key).is_number(),
                "distribution " + name + ": missing numeric param \"" + key + "\"");
        return params.at(key).get<double>();
    };

    auto build = [&]() -> Distribution {
        if (name == "pareto") {
            return pareto(num("alpha"), num("xm"));
        }
        if (name == "weibull") {
            return weibull(num("shape"), num("scale"));
        }
        if (name == "lognormal") {
            return lognormal(num("mu"), num("sigma"));
        }
        if (name == "exponential") {
            return exponential(num("rate"));
        }
        if (name == "uniform") {
            return uniform(num("a"), num("b"));
        }
        if (name == "discrete") {
            require(params.contains("atoms") && params.contains("probs"), "distribution discrete: need atoms and probs");
            return discrete(params.at("atoms").get<std::vector<double>>(), params.at("probs").get<std::vector<double>>());
        }
        if (name == "light_long_tail") {
            return light_long_tail(num("gamma"));
        }
        throw std::invalid_argument("distribution: unknown family \"" + name + "\"");
    };
    Distribution d = build();
    if (j.contains("shift") && !j.at("shift").is_null()) {
        require(j.at("shift").is_number(), "distribution: shift must be a number");
        return shifted(d, j.at("shift").get<double>());
    }
    return d;
}

QuadResult expectation(const Distribution& law, const Integrand& g, double lo, double hi,
                       std::span<const double> breakpoints, const QuadOptions& opts) {
    if (law.is_discrete()) {
        const auto atoms = law.atoms();
        const auto probs = law.atom_probs();
        QuadResult r;
        r.evaluations = 0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (atoms[k] > lo && atoms[k] <= hi) {
                r.value += probs[k] * g(atoms[k]);
                ++r.evaluations;
            }
        }
        return r;
    }
    const double a = std::max(lo, law.left_endpoint());
    const double b = std::min(hi, law.right_endpoint());
    if (!(a < b)) {
        return {};
    }
    auto f = [&](double y) { return g(y) * law.pdf(y); };
    std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
    if (std::isfinite(b)) {
        return integrate(f, a, b, cuts, opts);
    }
    cuts.push_back(law.tail_quantile(0.5));
    return integrate_to_infinity(f, a, cuts, opts);
}

}  // namespace tailrisk
