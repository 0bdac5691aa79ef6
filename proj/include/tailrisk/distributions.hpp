#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tailrisk/quadrature.hpp"
#include "tailrisk/random.hpp"

namespace tailrisk {

class Distribution;

namespace family {

struct Pareto {
    double alpha;
    double xm;
};

/// Heavy-tailed Weibull only: shape strictly inside (0, 1).
struct Weibull {
    double shape;
    double scale;
};

struct Lognormal {
    double mu;
    double sigma;
};

struct Exponential {
    double rate;
};

struct Uniform {
    double a;
    double b;
};

/// Finite atoms in strictly increasing order with their probabilities.
/// `suffix[k]` is the mass strictly above atoms[k] (summed from the right, so
/// small tails are not lost to cancellation).
struct DiscreteFinite {
    std::vector<double> atoms;
    std::vector<double> probs;
    std::vector<double> suffix;
};

/// Tail exp(-gamma x) (1 + x)^-2 on x >= 0: a member of L(gamma), gamma > 0.
struct LightLongTail {
    double gamma;
};

struct Shifted {
    std::shared_ptr<const Distribution> inner;
    double shift;
};

}  // namespace family

/// Parametric univariate law. Immutable value; copies share the (immutable)
/// inner law of a Shifted family.
class Distribution {
public:
    using Family = std::variant<family::Pareto, family::Weibull, family::Lognormal, family::Exponential,
                                family::Uniform, family::DiscreteFinite, family::LightLongTail, family::Shifted>;

    static Distribution pareto(double alpha, double xm);
    static Distribution weibull(double shape, double scale);
    static Distribution lognormal(double mu, double sigma);
    static Distribution exponential(double rate);
    static Distribution uniform(double a, double b);
    static Distribution discrete(std::vector<double> atoms, std::vector<double> probs);
    static Distribution light_long_tail(double gamma);
    /// Law of X + shift. Shifting a shifted law composes into a single shift.
    static Distribution shifted(const Distribution& inner, double shift);

    const Family& family() const { return family_; }
    std::string family_name() const;

    /// P(X > x).
    double tail(double x) const;
    /// log P(X > x), finite far beyond where tail() underflows.
    double log_tail(double x) const;
    /// P(X <= x) = 1 - tail(x).
    double cdf(double x) const { return 1.0 - tail(x); }
    /// P(X < x).
    double cdf_left(double x) const;
    /// P(X = x); nonzero only at atoms.
    double atom_mass(double x) const;
    /// Generalized inverse inf{x : cdf(x) >= p}.
    double quantile(double p) const;
    /// inf{x : tail(x) <= q}; accurate for q near 0 where quantile(1 - q) is not.
    double tail_quantile(double q) const;
    /// Density of a continuous family. Throws for discrete laws.
    double pdf(double x) const;
    /// Inverse-transform draw: quantile of one uniform from the stream.
    double sample(RandomStream& rng) const;

    /// sup{y : cdf(y) < 1}; +inf for unbounded laws.
    double right_endpoint() const;
    /// inf{y : cdf(y) > 0}; -inf when unbounded below.
    double left_endpoint() const;
    /// E exp(gamma X); +inf when it diverges.
    double exp_moment(double gamma) const;
    /// Lattice span of an equally spaced DiscreteFinite law.
    std::optional<double> lattice_span() const;

    bool is_discrete() const;
    /// Atoms and probabilities of a discrete law (shift applied). Empty for
    /// continuous laws.
    std::vector<double> atoms() const;
    std::vector<double> atom_probs() const;

    nlohmann::json to_json() const;
    static Distribution from_json(const nlohmann::json& j);

private:
    explicit Distribution(Family f) : family_(std::move(f)) {}
    Family family_;
};

/// Integral of `g` against the law over the half-open range (lo, hi]. Atoms
/// contribute exact point masses; continuous laws use adaptive quadrature
/// on the density, split at `breakpoints`.
QuadResult expectation(const Distribution& law, const Integrand& g, double lo, double hi,
                       std::span<const double> breakpoints = {}, const QuadOptions& opts = {});

// Free-function spellings of the member operations.
inline double tail(const Distribution& d, double x) { return d.tail(x); }
inline double cdf(const Distribution& d, double x) { return d.cdf(x); }
inline double quantile(const Distribution& d, double p) { return d.quantile(p); }
inline double sample(const Distribution& d, RandomStream& rng) { return d.sample(rng); }
inline double right_endpoint(const Distribution& d) { return d.right_endpoint(); }
inline double exp_moment(const Distribution& d, double gamma) { return d.exp_moment(gamma); }

}  // namespace tailrisk
