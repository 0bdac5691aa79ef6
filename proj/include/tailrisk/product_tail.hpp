#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "tailrisk/dependence.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/estimate.hpp"
#include "tailrisk/random.hpp"

namespace tailrisk {

enum class TailMethod { Exact, Quadrature, MonteCarlo };

std::string to_string(TailMethod m);

/// A tail value with its absolute-error estimate.
struct TailValue {
    double value = 0.0;
    double abs_error = 0.0;
    /// Error estimate above 1% of the value.
    bool warning = false;
    /// True value fell below 1e-300 and was reported as 0.
    bool clamped = false;
};

/// Tail values on an increasing grid.
struct TailCurve {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> errors;
    TailMethod method = TailMethod::Quadrature;

    /// Values in [0, 1], non-increasing along the grid, errors >= 0.
    bool well_formed() const;
    void write_csv(std::ostream& os, bool header = true) const;
};

inline constexpr double kTailFloor = 1e-300;

/// int_0^inf h(y) P(X > x / y) G(dy): exact atom sum for discrete G, adaptive
/// quadrature on the density of G otherwise. Requires x > 0.
TailValue h_integral_tail_detail(const Distribution& F, const Distribution& G, const DependenceModel& model, double x);
double h_integral_tail(const Distribution& F, const Distribution& G, const DependenceModel& model, double x);

/// The same integral as P(X Y_h > x) with Y_h ~ G_h independent of X,
/// integrated over the law of X through its tail quantile function.
double h_integral_tail_tilted(const Distribution& F, const TiltedLaw& tilted, double x);

/// Exact P(XY > x) for FGM(theta) with Y uniform on {1, 2}.
double exact_two_point_fgm_tail(const Distribution& F, double theta, double x);

/// Exact P(XY > x) = int P(X > x / y | Y = y) G(dy).
double exact_product_tail(const Distribution& F, const Distribution& G, const DependenceModel& model, double x);

/// Tail of X_i Y_1 ... Y_i, built from H_1 = h_integral_tail through
/// H_i(x) = int H_{i-1}(x / y) G(dy). Exact for discrete G; for continuous G
/// the previous level is tabulated on a geometric grid and interpolated.
TailValue iterated_tail(const Distribution& F, const Distribution& G, const DependenceModel& model, int i, double x);

/// Plain Monte Carlo estimate of P(X_i Y_1 ... Y_i > x) from i jointly drawn pairs.
BinomialEstimate mc_product_tail(const DependenceModel& model, const Distribution& F, const Distribution& G, int i,
                                 double x, std::uint64_t paths, RandomStream& rng);

TailCurve tail_curve(const std::vector<double>& grid, TailMethod method,
                     const std::function<TailValue(double)>& eval);

/// Shape-preserving (Fritsch-Carlson) interpolant of a positive decreasing
/// tail in log-log coordinates. Flat extension outside the knots.
class LogLogTailInterpolant {
public:
    LogLogTailInterpolant(std::vector<double> z, std::vector<double> values);
    double operator()(double z) const;
    /// Piecewise-linear (log-log) value, used as an interpolation error proxy.
    double linear(double z) const;

private:
    std::vector<double> lz_;
    std::vector<double> lv_;
    std::vector<double> slope_;
};

}  // namespace tailrisk
