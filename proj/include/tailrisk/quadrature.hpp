#pragma once

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tailrisk {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    bool converged = true;
    int evaluations = 0;

    QuadResult& operator+=(const QuadResult& o) {
        value += o.value;
        abs_error += o.abs_error;
        converged = converged && o.converged;
        evaluations += o.evaluations;
        return *this;
    }
};

struct QuadOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-300;
    int max_intervals = 4000;
};

/// Raised when an integral (or a computation built on one) cannot meet its
/// tolerance. Carries the best value reached and its error bound.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double partial, double bound)
        : std::runtime_error(what), partial_(partial), bound_(bound) {}
    double partial() const { return partial_; }
    double bound() const { return bound_; }

private:
    double partial_;
    double bound_;
};

using Integrand = std::function<double(double)>;

/// 21-point Gauss-Kronrod rule on [a, b]. Error estimate follows QUADPACK qk21.
QuadResult gauss_kronrod21(const Integrand& f, double a, double b);

/// Globally adaptive Gauss-Kronrod integration on the finite interval [a, b].
/// `breakpoints` (any order, out-of-range values ignored) seed the initial
/// partition so kinks and jumps of the integrand sit on interval boundaries.
QuadResult integrate(const Integrand& f, double a, double b, std::span<const double> breakpoints = {},
                     const QuadOptions& opts = {});

/// Integral over [a, +inf) through y = a + t / (1 - t).
QuadResult integrate_to_infinity(const Integrand& f, double a, std::span<const double> breakpoints = {},
                                 const QuadOptions& opts = {});

/// Like integrate() but throws NumericError when the tolerance is not met.
double integrate_or_throw(const Integrand& f, double a, double b, std::span<const double> breakpoints = {},
                          const QuadOptions& opts = {});

}  // namespace tailrisk
