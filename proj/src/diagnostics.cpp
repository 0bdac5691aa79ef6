#include "tailrisk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tailrisk/csv.hpp"
#include "tailrisk/product_tail.hpp"

namespace tailrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RatioPoint make_point(double x, double ratio, double target) {
    RatioPoint p{x, ratio, target, 0.0};
    p.deviation = std::isfinite(ratio) ? std::abs(ratio / target - 1.0) : kInf;
    return p;
}

void require_grid(const std::vector<double>& x_grid) {
    if (x_grid.empty()) {
        throw std::invalid_argument("empty x grid");
    }
    for (std::size_t k = 1; k < x_grid.size(); ++k) {
        if (!(x_grid[k] > x_grid[k - 1])) {
            throw std::invalid_argument("x grid must be strictly increasing");
        }
    }
}

}  // namespace

nlohmann::json ProbeReport::to_json() const {
    return {{"probe", probe},
            {"pass", pass},
            {"max_dev", max_dev},
            {"trend", trend},
            {"note", note.empty() ? std::string("evidence, not proof") : "evidence, not proof; " + note}};
}

void ProbeReport::write_csv(std::ostream& os) const {
    os << "x,ratio,target,deviation\n";
    for (const auto& p : points) {
        os << format_number(p.x) << ',' << format_number(p.ratio) << ',' << format_number(p.target) << ','
           << format_number(p.deviation) << '\n';
    }
}

ProbeReport summarize_probe(std::string probe, std::vector<RatioPoint> points, double tolerance) {
    ProbeReport r;
    r.probe = std::move(probe);
    r.points = std::move(points);
    bool strict = true;
    bool non_inc = true;
    bool non_dec = true;
    for (std::size_t k = 0; k < r.points.size(); ++k) {
        r.max_dev = std::max(r.max_dev, r.points[k].deviation);
        if (k == 0) {
            continue;
        }
        const double prev = r.points[k - 1].deviation;
        const double cur = r.points[k].deviation;
        const double slack = 1e-12 * std::max(prev, cur) + 1e-15;
        strict = strict && cur < prev;
        non_inc = non_inc && cur <= prev + slack;
        non_dec = non_dec && cur >= prev - slack;
    }
    if (r.points.size() > 1 && strict) {
        r.trend = "decreasing";
    } else if (non_inc) {
        r.trend = "non-increasing";
    } else if (non_dec) {
        r.trend = "increasing";
    } else {
        r.trend = "mixed";
    }
    const double last = r.points.empty() ? kInf : r.points.back().deviation;
    r.pass = last <= tolerance && (r.trend == "decreasing" || r.trend == "non-increasing");
    return r;
}

std::vector<RatioPoint> long_tail_ratio(const Distribution& V, double gamma, double t,
                                        const std::vector<double>& x_grid) {
    if (!(gamma >= 0.0) || !(t > 0.0)) {
        throw std::invalid_argument("long_tail_ratio: need gamma >= 0 and t > 0");
    }
    require_grid(x_grid);
    if (gamma > 0.0) {
        if (const auto span = V.lattice_span()) {
            const double k = t / *span;
            if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
                throw std::domain_error("long_tail_ratio: t = " + format_number(t) +
                                        " is not a multiple of the lattice span " + format_number(*span));
            }
        }
    }
    const double target = std::exp(gamma * t);
    std::vector<RatioPoint> out;
    out.reserve(x_grid.size());
    for (double x : x_grid) {
        const double num = V.log_tail(x - t);
        const double den = V.log_tail(x);
        double ratio;
        if (std::isfinite(den)) {
            ratio = std::exp(num - den);
        } else {
            ratio = std::isfinite(num) ? kInf : std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(make_point(x, ratio, target));
    }
    return out;
}

namespace {

// P(V1 + V2 > x) * exp(-log_scale), so ratios stay finite where the tail underflows.
double scaled_convolution_tail(const Distribution& V, double x, double log_scale, std::size_t grid_points,
                               double* mass) {
    if (V.is_discrete()) {
        const auto a = V.atoms();
        const auto p = V.atom_probs();
        double s = 0.0;
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = 0; j < a.size(); ++j) {
                m += p[i] * p[j];
                if (a[i] + a[j] > x) {
                    s += p[i] * p[j];
                }
            }
        }
        if (mass != nullptr) {
            *mass = m;
        }
        return s * std::exp(-log_scale);
    }
    if (grid_points < 16) {
        throw std::invalid_argument("convolution_tail: grid too small");
    }
    const double alpha = V.left_endpoint();
    if (std::isfinite(alpha) && x < 2.0 * alpha) {
        if (mass != nullptr) {
            *mass = 1.0;
        }
        return std::exp(-log_scale);
    }
    // Split on the smaller summand: P(S > x) = 2 int_{u <= x/2} Vbar(x - u) V(du) + Vbar(x/2)^2.
    const double half = 0.5 * x;
    const double lo = std::min(std::max(alpha, V.quantile(1e-12)), half);
    const double width = half - lo;
    auto g = [&](double u) { return std::exp(V.log_tail(x - u) - log_scale); };

    std::vector<double> grid;
    if (width > 0.0) {
        // Union of an even grid and a grid geometric in u - lo: fine spacing
        // both near the lower endpoint and across the whole range.
        const std::size_t n = grid_points / 2;
        grid.reserve(2 * n + 1);
        const double d0 = 1e-9 * width;
        const double lr = std::log(width / d0);
        grid.push_back(lo);
        for (std::size_t k = 0; k < n; ++k) {
            grid.push_back(lo + width * static_cast<double>(k + 1) / static_cast<double>(n));
            grid.push_back(lo + d0 * std::exp(lr * static_cast<double>(k) / static_cast<double>(n - 1)));
        }
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        grid.back() = half;
    }

    double below = V.cdf(lo);
    // Mass below the grid, where Vbar(x - u) <= Vbar(x - lo).
    double integral = below * g(lo);
    double covered = below;
    // Increments as tail differences keep their relative precision far out.
    double prev_tail = V.tail(lo);
    double prev_g = g(lo);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double tk = V.tail(grid[k]);
        const double gk = g(grid[k]);
        const double dF = prev_tail - tk;
        integral += 0.5 * (prev_g + gk) * dF;
        covered += dF;
        prev_tail = tk;
        prev_g = gk;
    }
    const double upper = V.tail(half);
    if (mass != nullptr) {
        *mass = covered + upper;
    }
    return std::min(std::exp(-log_scale), 2.0 * integral + std::exp(2.0 * V.log_tail(half) - log_scale));
}

}  // namespace

double convolution_tail(const Distribution& V, double x, std::size_t grid_points, double* mass) {
    return scaled_convolution_tail(V, x, 0.0, grid_points, mass);
}

ConvolutionProbe convolution_tail_ratio(const Distribution& V, double gamma, const std::vector<double>& x_grid,
                                        std::size_t grid_points) {
    require_grid(x_grid);
    ConvolutionProbe out;
    out.c = V.exp_moment(gamma);
    if (!std::isfinite(out.c)) {
        throw std::domain_error("convolution_tail_ratio: E exp(gamma V) is infinite for gamma = " +
                                format_number(gamma));
    }
    const double target = 2.0 * out.c;
    for (double x : x_grid) {
        double m = 0.0;
        const double lt = V.log_tail(x);
        const double ratio = std::isfinite(lt) ? scaled_convolution_tail(V, x, lt, grid_points, &m)
                                               : std::numeric_limits<double>::quiet_NaN();
        out.points.push_back(make_point(x, ratio, target));
        out.mass.push_back(m);
    }
    return out;
}

AssumptionBReport assumption_b_ratio(const Distribution& G, const std::function<double(double)>& h_tail, double b,
                                     const std::vector<double>& x_grid) {
    if (!(b > 0.0)) {
        throw std::invalid_argument("assumption_b_ratio: b must be positive");
    }
    require_grid(x_grid);
    AssumptionBReport out;
    const double beta = G.right_endpoint();
    if (std::isfinite(beta)) {
        out.note = "G is bounded: the ratio is exactly 0 for x >= " + format_number(beta / b) +
                   ", so the condition holds automatically";
    } else {
        out.note = "G is unbounded: finite-grid evidence only";
    }
    for (double x : x_grid) {
        const double h = h_tail(x);
        if (!(h > 0.0)) {
            throw std::invalid_argument("assumption_b_ratio: product tail must be positive on the grid");
        }
        const double ratio = b * x >= beta ? 0.0 : G.tail(b * x) / h;
        out.points.push_back({x, ratio, 0.0, ratio});
    }
    return out;
}

double classify_product(double gamma_F, double beta_G) {
    if (!(gamma_F >= 0.0) || !(beta_G > 0.0)) {
        throw std::invalid_argument("classify_product: need gamma >= 0 and beta_G > 0");
    }
    if (std::isinf(beta_G)) {
        return 0.0;
    }
    return gamma_F / beta_G;
}

ProbeReport verify_product_class(const Distribution& F, const Distribution& G, const DependenceModel& model,
                                 double gamma_F, double t, const std::vector<double>& x_grid, double tolerance) {
    require_valid(model, F, G);
    require_grid(x_grid);
    if (!(t > 0.0)) {
        throw std::invalid_argument("verify_product_class: t must be positive");
    }
    const double gamma_H = classify_product(gamma_F, G.right_endpoint());
    const double target = std::exp(gamma_H * t);
    std::vector<RatioPoint> pts;
    for (double x : x_grid) {
        const double num = exact_product_tail(F, G, model, x - t);
        const double den = exact_product_tail(F, G, model, x);
        const double ratio = den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
        pts.push_back(make_point(x, ratio, target));
    }
    ProbeReport r = summarize_probe("product_long_tail", std::move(pts), tolerance);
    r.note = "target exp(" + format_number(gamma_H) + " t)";
    return r;
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) {
        throw std::invalid_argument("ks_distance: empty sample");
    }
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_distance_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("ks_distance_two_sample: empty sample");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) {
            ++i;
        }
        while (j < b.size() && b[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace tailrisk
