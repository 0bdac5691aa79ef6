#pragma once

#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tailrisk/dependence.hpp"
#include "tailrisk/distributions.hpp"

namespace tailrisk {

/// One probe point: ratio against its limiting target.
struct RatioPoint {
    double x = 0.0;
    double ratio = 0.0;
    double target = 0.0;
    /// |ratio / target - 1|.
    double deviation = 0.0;
};

/// Finite-grid evidence about a limit. Only trends are certified.
struct ProbeReport {
    std::string probe;
    std::vector<RatioPoint> points;
    bool pass = false;
    double max_dev = 0.0;
    /// "decreasing", "non-increasing", "increasing" or "mixed" along the grid.
    std::string trend;
    std::string note;

    nlohmann::json to_json() const;
    /// Columns x, ratio, target, deviation.
    void write_csv(std::ostream& os) const;
};

/// Trend of the deviations and a verdict: pass when the last deviation is
/// within `tolerance` and the deviations do not grow along the grid.
ProbeReport summarize_probe(std::string probe, std::vector<RatioPoint> points, double tolerance);

/// tail(x - t) / tail(x) against e^{gamma t}. For a lattice law and gamma > 0,
/// t must be a multiple of the span (std::domain_error otherwise).
std::vector<RatioPoint> long_tail_ratio(const Distribution& V, double gamma, double t, const std::vector<double>& x_grid);

struct ConvolutionProbe {
    std::vector<RatioPoint> points;
    /// Mass of the discretized law per grid point; 1 up to discretization error.
    std::vector<double> mass;
    /// exp_moment(gamma).
    double c = 0.0;
};

/// P(V1 + V2 > x) / P(V > x) against 2c, with c = E e^{gamma V}. The
/// convolution tail comes from an independent oracle: a Stieltjes trapezoid
/// rule on `grid_points` points for continuous laws, exact pair sums for
/// discrete ones. Throws std::domain_error when c is infinite.
ConvolutionProbe convolution_tail_ratio(const Distribution& V, double gamma, const std::vector<double>& x_grid,
                                        std::size_t grid_points = 1u << 16);

/// P(V1 + V2 > x) by the convolution oracle above.
double convolution_tail(const Distribution& V, double x, std::size_t grid_points = 1u << 16, double* mass = nullptr);

struct AssumptionBReport {
    /// (x, Gbar(b x) / Hbar(x)); target 0.
    std::vector<RatioPoint> points;
    std::string note;
};

/// Gbar(b x) / Hbar(x) on the grid. Exact 0 once b x is past the right
/// endpoint of a bounded G. Throws std::invalid_argument when Hbar <= 0.
AssumptionBReport assumption_b_ratio(const Distribution& G, const std::function<double(double)>& h_tail, double b,
                                     const std::vector<double>& x_grid);

/// Long-tail index of the product: gamma_F / beta_G, with beta_G = inf giving 0.
double classify_product(double gamma_F, double beta_G);

/// Long-tail ratios of the exact product tail P(XY > x) against
/// e^{classify_product(gamma_F, beta_G) t}.
ProbeReport verify_product_class(const Distribution& F, const Distribution& G, const DependenceModel& model,
                                 double gamma_F, double t, const std::vector<double>& x_grid,
                                 double tolerance = 0.01);

/// sup |F_n - F| of a sample against a continuous cdf.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);
/// sup |F_n - G_m| of two samples.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace tailrisk
