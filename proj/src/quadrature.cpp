#include "tailrisk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace tailrisk {

namespace {

// Abscissae and weights of the 10-point Gauss / 21-point Kronrod pair.
constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208175127313, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Gauss weights for kXgk[1], kXgk[3], ..., kXgk[9].
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kUflow = std::numeric_limits<double>::min();

struct Segment {
    double a;
    double b;
    QuadResult r;
    bool at_roundoff;
    bool operator<(const Segment& o) const { return r.abs_error < o.r.abs_error; }
};

Segment make_segment(const Integrand& f, double a, double b) {
    Segment s{a, b, gauss_kronrod21(f, a, b), false};
    // Error already at the rounding floor of the rule: bisecting cannot help.
    s.at_roundoff = s.r.abs_error <= 100.0 * kEps * std::abs(s.r.value) || (b - a) <= 1e3 * kEps * std::abs(a);
    return s;
}

}  // namespace

QuadResult gauss_kronrod21(const Integrand& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double abs_half = std::abs(half);

    double fv1[10];
    double fv2[10];
    const double fc = f(center);
    double resg = 0.0;
    double resk = kWgk[10] * fc;
    double resabs = std::abs(resk);
    for (int j = 0; j < 5; ++j) {
        const int k = 2 * j + 1;
        const double dx = half * kXgk[k];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv1[k] = f1;
        fv2[k] = f2;
        resg += kWg[j] * (f1 + f2);
        resk += kWgk[k] * (f1 + f2);
        resabs += kWgk[k] * (std::abs(f1) + std::abs(f2));
    }
    for (int j = 0; j < 5; ++j) {
        const int k = 2 * j;
        const double dx = half * kXgk[k];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv1[k] = f1;
        fv2[k] = f2;
        resk += kWgk[k] * (f1 + f2);
        resabs += kWgk[k] * (std::abs(f1) + std::abs(f2));
    }
    const double reskh = resk * 0.5;
    double resasc = kWgk[10] * std::abs(fc - reskh);
    for (int j = 0; j < 10; ++j) {
        resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
    }

    QuadResult out;
    out.value = resk * half;
    resabs *= abs_half;
    resasc *= abs_half;
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    if (resabs > kUflow / (50.0 * kEps)) {
        err = std::max(50.0 * kEps * resabs, err);
    }
    out.abs_error = err;
    out.evaluations = 21;
    if (!std::isfinite(out.value)) {
        out.converged = false;
    }
    return out;
}

QuadResult integrate(const Integrand& f, double a, double b, std::span<const double> breakpoints,
                     const QuadOptions& opts) {
    if (!(a < b)) {
        return {};
    }
    std::vector<double> cuts{a};
    for (double p : breakpoints) {
        if (p > a && p < b && std::isfinite(p)) {
            cuts.push_back(p);
        }
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::priority_queue<Segment> heap;
    std::vector<Segment> settled;
    int evaluations = 0;
    double value = 0.0;
    double open_error = 0.0;
    double settled_error = 0.0;
    auto admit = [&](const Segment& s) {
        value += s.r.value;
        if (s.at_roundoff) {
            settled_error += s.r.abs_error;
            settled.push_back(s);
        } else {
            open_error += s.r.abs_error;
            heap.push(s);
        }
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Segment s = make_segment(f, cuts[i], cuts[i + 1]);
        evaluations += s.r.evaluations;
        admit(s);
    }

    bool converged = true;
    int intervals = static_cast<int>(cuts.size()) - 1;
    while (!heap.empty()) {
        const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
        if (open_error + settled_error <= target || open_error <= std::max(target - settled_error, 0.0)) {
            break;
        }
        if (intervals >= opts.max_intervals || !std::isfinite(value)) {
            converged = false;
            break;
        }
        Segment worst = heap.top();
        heap.pop();
        value -= worst.r.value;
        open_error -= worst.r.abs_error;
        const double mid = 0.5 * (worst.a + worst.b);
        admit(make_segment(f, worst.a, mid));
        admit(make_segment(f, mid, worst.b));
        evaluations += 42;
        ++intervals;
    }

    // Final sum in increasing magnitude; the running value above carries
    // cancellation from the repeated add/subtract updates.
    std::vector<Segment> all = std::move(settled);
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(),
              [](const Segment& l, const Segment& r) { return std::abs(l.r.value) < std::abs(r.r.value); });
    QuadResult out;
    out.evaluations = evaluations;
    for (const auto& s : all) {
        out.value += s.r.value;
        out.abs_error += s.r.abs_error;
        out.converged = out.converged && s.r.converged;
    }
    out.converged = out.converged && converged && std::isfinite(out.value);
    return out;
}

QuadResult integrate_to_infinity(const Integrand& f, double a, std::span<const double> breakpoints,
                                 const QuadOptions& opts) {
    std::vector<double> mapped;
    mapped.reserve(breakpoints.size());
    for (double p : breakpoints) {
        if (p > a && std::isfinite(p)) {
            const double d = p - a;
            mapped.push_back(d / (1.0 + d));
        }
    }
    auto g = [&](double t) {
        if (t >= 1.0) {
            return 0.0;
        }
        const double s = 1.0 - t;
        const double v = f(a + t / s);
        return v == 0.0 ? 0.0 : v / (s * s);
    };
    return integrate(g, 0.0, 1.0, mapped, opts);
}

double integrate_or_throw(const Integrand& f, double a, double b, std::span<const double> breakpoints,
                          const QuadOptions& opts) {
    const QuadResult r = integrate(f, a, b, breakpoints, opts);
    if (!r.converged) {
        throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " + std::to_string(b) + "]",
                           r.value, r.abs_error);
    }
    return r.value;
}

}  // namespace tailrisk
