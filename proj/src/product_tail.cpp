#include "tailrisk/product_tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tailrisk/csv.hpp"

namespace tailrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr QuadOptions kTailQuad{1e-12, 1e-300, 6000};
// Mass of G dropped at each end when an unbounded G is truncated for the
// tabulated recursion.
constexpr double kTruncation = 1e-15;
// Geometric grid ratio 2^(1/16).
const double kGridRatio = std::exp2(1.0 / 16.0);

void require_positive(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("product tail: x must be > 0");
    }
}

// `underflow`: some positive contribution was lost below double range.
TailValue finish(double value, double err, bool underflow = false) {
    TailValue t;
    t.value = std::clamp(value, 0.0, 1.0);
    t.abs_error = err;
    if (t.value < kTailFloor) {
        t.clamped = t.value > 0.0 || value > 0.0 || underflow;
        t.value = 0.0;
    }
    t.warning = err > 0.01 * t.value && err > kTailFloor;
    return t;
}

std::vector<double> f_breakpoints(const Distribution& F, double x) {
    std::vector<double> bps;
    const double a = F.left_endpoint();
    const double b = F.right_endpoint();
    if (a > 0.0) {
        bps.push_back(x / a);
    }
    if (std::isfinite(b) && b > 0.0) {
        bps.push_back(x / b);
    }
    return bps;
}

std::vector<double> geometric_grid(double lo, double hi) {
    std::vector<double> g{lo};
    while (g.back() < hi) {
        g.push_back(g.back() * kGridRatio);
    }
    return g;
}

// One tabulated level of the recursion: values and error bounds on a grid.
struct Level {
    std::vector<double> z;
    std::vector<double> values;
    double max_error = 0.0;
};

// int H(z / y) G(dy) over y > 0 for a tabulated H, with the interpolation
// error proxy and the propagated error of H folded into the bound.
TailValue integrate_level(const Distribution& G, const Level& prev, const LogLogTailInterpolant& interp, double z) {
    auto smooth = [&](double y) { return interp(z / y); };
    auto linear = [&](double y) { return interp.linear(z / y); };
    const QuadResult r = expectation(G, smooth, 0.0, kInf, {}, kTailQuad);
    if (!r.converged) {
        throw NumericError("iterated tail quadrature did not converge", r.value, r.abs_error);
    }
    const QuadResult lin = expectation(G, linear, 0.0, kInf, {}, kTailQuad);
    const double err = r.abs_error + std::abs(r.value - lin.value) + prev.max_error + 2.0 * kTruncation;
    return finish(r.value, err);
}

}  // namespace

std::string to_string(TailMethod m) {
    switch (m) {
        case TailMethod::Exact:
            return "exact";
        case TailMethod::Quadrature:
            return "quadrature";
        case TailMethod::MonteCarlo:
            return "montecarlo";
    }
    return "unknown";
}

bool TailCurve::well_formed() const {
    if (grid.size() != values.size() || grid.size() != errors.size()) {
        return false;
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(values[k] >= 0.0 && values[k] <= 1.0) || !(errors[k] >= 0.0)) {
            return false;
        }
        if (k > 0 && (grid[k] <= grid[k - 1] || values[k] > values[k - 1])) {
            return false;
        }
    }
    return true;
}

void TailCurve::write_csv(std::ostream& os, bool header) const {
    if (header) {
        os << "x,value,abs_error,method\n";
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        os << format_number(grid[k]) << ',' << format_number(values[k]) << ',' << format_number(errors[k]) << ','
           << to_string(method) << '\n';
    }
}

TailCurve tail_curve(const std::vector<double>& grid, TailMethod method, const std::function<TailValue(double)>& eval) {
    TailCurve c;
    c.method = method;
    c.grid = grid;
    for (double x : grid) {
        const TailValue t = eval(x);
        c.values.push_back(t.value);
        c.errors.push_back(t.abs_error);
    }
    return c;
}

TailValue h_integral_tail_detail(const Distribution& F, const Distribution& G, const DependenceModel& model, double x) {
    require_positive(x);
    if (G.is_discrete()) {
        const auto atoms = G.atoms();
        const auto probs = G.atom_probs();
        double s = 0.0;
        bool underflow = false;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (atoms[k] > 0.0) {
                const double ft = F.tail(x / atoms[k]);
                underflow = underflow || (ft == 0.0 && std::isfinite(F.log_tail(x / atoms[k])));
                s += probs[k] * h_value(model, G, atoms[k]) * ft;
            }
        }
        return finish(s, 0.0, underflow);
    }
    auto integrand = [&](double y) { return y > 0.0 ? h_value(model, G, y) * F.tail(x / y) : 0.0; };
    const auto bps = f_breakpoints(F, x);
    const QuadResult r = expectation(G, integrand, 0.0, kInf, bps, kTailQuad);
    if (!r.converged) {
        throw NumericError("h-integral quadrature did not converge at x = " + format_number(x), r.value, r.abs_error);
    }
    return finish(r.value, r.abs_error);
}

double h_integral_tail(const Distribution& F, const Distribution& G, const DependenceModel& model, double x) {
    return h_integral_tail_detail(F, G, model, x).value;
}

double h_integral_tail_tilted(const Distribution& F, const TiltedLaw& tilted, double x) {
    require_positive(x);
    if (const auto& d = tilted.discrete()) {
        const auto atoms = d->atoms();
        const auto probs = d->atom_probs();
        double s = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (atoms[k] > 0.0) {
                s += probs[k] * F.tail(x / atoms[k]);
            }
        }
        return finish(s, 0.0).value;
    }
    if (F.is_discrete()) {
        const auto atoms = F.atoms();
        const auto probs = F.atom_probs();
        double s = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (atoms[k] > 0.0) {
                s += probs[k] * tilted.tail(x / atoms[k]);
            }
        }
        return finish(s, 0.0).value;
    }
    // P(X Y_h > x) = int_{X > 0} Gbar_h(x / u) F(du), with u = tail_quantile(q).
    const double beta = tilted.right_endpoint();
    const double alpha = tilted.left_endpoint();
    const double q_max = std::isfinite(beta) ? F.tail(x / beta) : F.tail(0.0);
    const double q_flat = alpha > 0.0 ? F.tail(x / alpha) : 0.0;
    auto integrand = [&](double q) {
        const double u = F.tail_quantile(q);
        return u > 0.0 ? tilted.tail(x / u) : 0.0;
    };
    const double bps[] = {q_flat};
    const QuadResult r = integrate(integrand, 0.0, q_max, bps, kTailQuad);
    if (!r.converged) {
        throw NumericError("tilted-route quadrature did not converge at x = " + format_number(x), r.value,
                           r.abs_error);
    }
    return finish(r.value, r.abs_error).value;
}

double exact_two_point_fgm_tail(const Distribution& F, double theta, double x) {
    if (!(std::abs(theta) <= 1.0)) {
        throw std::domain_error("exact_two_point_fgm_tail: |theta| must be <= 1");
    }
    const double f1 = F.tail(x);
    const double f2 = F.tail(x / 2.0);
    return 0.5 * (f1 + f2) + 0.25 * theta * (f2 - f1) - 0.25 * theta * (f2 * f2 - f1 * f1);
}

double exact_product_tail(const Distribution& F, const Distribution& G, const DependenceModel& model, double x) {
    require_positive(x);
    auto integrand = [&](double y) { return y > 0.0 ? conditional_tail_given_y(model, F, G, x / y, y) : 0.0; };
    const auto bps = f_breakpoints(F, x);
    const QuadResult r = expectation(G, integrand, 0.0, kInf, bps, kTailQuad);
    if (!r.converged) {
        throw NumericError("exact product tail quadrature did not converge", r.value, r.abs_error);
    }
    return finish(r.value, r.abs_error).value;
}

TailValue iterated_tail(const Distribution& F, const Distribution& G, const DependenceModel& model, int i, double x) {
    require_positive(x);
    if (i < 1) {
        throw std::domain_error("iterated_tail: i must be >= 1");
    }
    if (i == 1) {
        return h_integral_tail_detail(F, G, model, x);
    }

    if (G.is_discrete()) {
        const auto atoms = G.atoms();
        const auto probs = G.atom_probs();
        const double branches = std::pow(static_cast<double>(atoms.size()), i - 1);
        if (branches <= static_cast<double>(1 << 20)) {
            // Exact recursion over the atoms of Y_1 ... Y_{i-1}.
            std::function<TailValue(int, double)> level = [&](int j, double z) -> TailValue {
                if (j == 1) {
                    return h_integral_tail_detail(F, G, model, z);
                }
                double s = 0.0;
                double e = 0.0;
                for (std::size_t k = 0; k < atoms.size(); ++k) {
                    if (atoms[k] > 0.0) {
                        const TailValue t = level(j - 1, z / atoms[k]);
                        s += probs[k] * t.value;
                        e += probs[k] * t.abs_error;
                    }
                }
                return finish(s, e);
            };
            return level(i, x);
        }
    }

    // Tabulated recursion over the effective support [ylo, yhi] of G.
    const double alpha = G.left_endpoint();
    const double beta = G.right_endpoint();
    double ylo = alpha > 0.0 ? alpha : G.quantile(kTruncation);
    double yhi = std::isfinite(beta) ? beta : G.tail_quantile(kTruncation);
    if (!(ylo > 0.0)) {
        ylo = std::max(G.quantile(kTruncation), std::numeric_limits<double>::min());
    }

    Level prev;
    for (int j = 1; j < i; ++j) {
        const int remaining = i - j;
        const double zmin = x / std::pow(yhi, remaining);
        const double zmax = x / std::pow(ylo, remaining);
        Level cur;
        cur.z = geometric_grid(zmin, zmax);
        if (j == 1) {
            for (double z : cur.z) {
                const TailValue t = h_integral_tail_detail(F, G, model, z);
                cur.values.push_back(t.value);
                cur.max_error = std::max(cur.max_error, t.abs_error);
            }
        } else {
            const LogLogTailInterpolant interp(prev.z, prev.values);
            for (double z : cur.z) {
                const TailValue t = integrate_level(G, prev, interp, z);
                cur.values.push_back(t.value);
                cur.max_error = std::max(cur.max_error, t.abs_error);
            }
        }
        prev = std::move(cur);
    }
    const LogLogTailInterpolant interp(prev.z, prev.values);
    return integrate_level(G, prev, interp, x);
}

BinomialEstimate mc_product_tail(const DependenceModel& model, const Distribution& F, const Distribution& G, int i,
                                 double x, std::uint64_t paths, RandomStream& rng) {
    if (i < 1) {
        throw std::domain_error("mc_product_tail: i must be >= 1");
    }
    std::uint64_t hits = 0;
    for (std::uint64_t p = 0; p < paths; ++p) {
        double discount = 1.0;
        double last_x = 0.0;
        for (int j = 0; j < i; ++j) {
            const PairSample s = sample_pair(model, F, G, rng);
            discount *= s.y;
            last_x = s.x;
        }
        if (last_x * discount > x) {
            ++hits;
        }
    }
    return BinomialEstimate::from_counts(hits, paths);
}

// ---------------------------------------------------------------------------

LogLogTailInterpolant::LogLogTailInterpolant(std::vector<double> z, std::vector<double> values) {
    if (z.size() != values.size() || z.size() < 2) {
        throw std::invalid_argument("interpolant: need at least two knots");
    }
    const std::size_t n = z.size();
    lz_.resize(n);
    lv_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        lz_[k] = std::log(z[k]);
        lv_[k] = std::log(std::max(values[k], kTailFloor));
    }
    std::vector<double> delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        delta[k] = (lv_[k + 1] - lv_[k]) / (lz_[k + 1] - lz_[k]);
    }
    slope_.assign(n, 0.0);
    slope_[0] = delta[0];
    slope_[n - 1] = delta[n - 2];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (delta[k - 1] * delta[k] <= 0.0) {
            slope_[k] = 0.0;
        } else {
            // Weighted harmonic mean (Fritsch-Butland form), monotone by construction.
            const double h0 = lz_[k] - lz_[k - 1];
            const double h1 = lz_[k + 1] - lz_[k];
            const double w1 = 2.0 * h1 + h0;
            const double w2 = h1 + 2.0 * h0;
            slope_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
}

double LogLogTailInterpolant::operator()(double z) const {
    const double t = std::log(z);
    if (t <= lz_.front()) {
        return std::exp(lv_.front());
    }
    if (t >= lz_.back()) {
        return std::exp(lv_.back());
    }
    const auto k = static_cast<std::size_t>(std::upper_bound(lz_.begin(), lz_.end(), t) - lz_.begin()) - 1;
    const double h = lz_[k + 1] - lz_[k];
    const double s = (t - lz_[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double v = (2 * s3 - 3 * s2 + 1) * lv_[k] + (s3 - 2 * s2 + s) * h * slope_[k] +
                     (-2 * s3 + 3 * s2) * lv_[k + 1] + (s3 - s2) * h * slope_[k + 1];
    return std::exp(v);
}

double LogLogTailInterpolant::linear(double z) const {
    const double t = std::log(z);
    if (t <= lz_.front()) {
        return std::exp(lv_.front());
    }
    if (t >= lz_.back()) {
        return std::exp(lv_.back());
    }
    const auto k = static_cast<std::size_t>(std::upper_bound(lz_.begin(), lz_.end(), t) - lz_.begin()) - 1;
    const double s = (t - lz_[k]) / (lz_[k + 1] - lz_[k]);
    return std::exp(lv_[k] + s * (lv_[k + 1] - lv_[k]));
}

}  // namespace tailrisk
