#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "tailrisk/dependence.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/estimate.hpp"
#include "tailrisk/random.hpp"

namespace tailrisk {

/// Discrete-time risk model: i.i.d. pairs (X_i, Y_i) with net loss X_i ~ F,
/// discount factor Y_i ~ G >= 0 and dependence `model` within each pair.
class RiskModelSpec {
public:
    /// Throws std::invalid_argument for a bad horizon, negative support of G,
    /// or a law degenerate at 0; ModelInvalidError when the dependence model
    /// does not validate against (F, G).
    RiskModelSpec(Distribution F, Distribution G, DependenceModel model, int horizon);

    const Distribution& F() const { return F_; }
    const Distribution& G() const { return G_; }
    const DependenceModel& model() const { return model_; }
    int horizon() const { return horizon_; }

    RiskModelSpec with_horizon(int n) const { return {F_, G_, model_, n}; }

private:
    Distribution F_;
    Distribution G_;
    DependenceModel model_;
    int horizon_;
};

struct PathOutcome {
    /// max over 1 <= m <= n of S_m.
    double max_partial_sum;
    /// First m attaining the maximum.
    int argmax;
    /// S_1, ..., S_n.
    std::vector<double> partial_sums;
};

/// One path of S_m = sum_{i <= m} X_i Y_1 ... Y_i.
PathOutcome simulate_path(const RiskModelSpec& spec, RandomStream& rng);

/// (S_n, T_n) from one draw of the pairs, with T_n = sum_i X_i Y_i ... Y_n.
std::pair<double, double> forward_and_backward_sums(const RiskModelSpec& spec, RandomStream& rng);

struct RuinEstimate {
    double x = 0.0;
    int n = 0;
    double p_hat = 0.0;
    double std_err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t paths = 0;
    /// trigger_histogram[m - 1]: ruined paths whose partial sum first exceeds x at period m.
    std::vector<std::uint64_t> trigger_histogram;

    std::uint64_t ruin_count() const;
};

/// Path j draws from substream (seed, j), so results do not depend on
/// `chunks`, and runs with horizons n < n' share their first n periods.
/// Threads take paths in blocks of this size.
inline constexpr std::uint64_t kPathsPerBlock = 1u << 16;

/// Monte Carlo estimate of psi(x; n) for every x in the (strictly increasing,
/// positive) grid from one pass of `paths` paths, run on `chunks` threads.
std::vector<RuinEstimate> estimate_ruin(const RiskModelSpec& spec, const std::vector<double>& x_grid,
                                        std::uint64_t paths, std::uint64_t seed, int chunks = 1);

struct AsymptoticRuin {
    double value = 0.0;
    double abs_error = 0.0;
    /// H_1(x), ..., H_n(x).
    std::vector<double> terms;
    /// The sum is an asymptotic tail sum and may exceed 1 at small x.
    bool exceeds_one = false;
    bool warning = false;
};

/// sum_{i=1}^n H_i(x).
AsymptoticRuin asymptotic_ruin(const RiskModelSpec& spec, double x);

struct RuinComparisonRow {
    RuinEstimate mc;
    double asym_sum = 0.0;
    double ratio = 0.0;
    double ratio_se = 0.0;
    bool asym_warning = false;
    std::uint64_t seed = 0;
};

std::vector<RuinComparisonRow> compare_ruin(const RiskModelSpec& spec, const std::vector<double>& x_grid,
                                            std::uint64_t paths, std::uint64_t seed, int chunks = 1);

/// Columns x, n, psi_hat, std_err, ci_lo, ci_hi, asym_sum, ratio, ratio_se, paths, seed.
void write_comparison_csv(std::ostream& os, const std::vector<RuinComparisonRow>& rows);

}  // namespace tailrisk
