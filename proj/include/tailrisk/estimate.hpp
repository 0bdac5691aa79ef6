#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace tailrisk {

/// Indicator-mean estimate with its binomial standard error and a 95% Wald
/// interval clamped to [0, 1].
struct BinomialEstimate {
    double p_hat = 0.0;
    double std_err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t paths = 0;

    static BinomialEstimate from_counts(std::uint64_t hits, std::uint64_t paths) {
        BinomialEstimate e;
        e.hits = hits;
        e.paths = paths;
        if (paths == 0) {
            return e;
        }
        const double n = static_cast<double>(paths);
        e.p_hat = static_cast<double>(hits) / n;
        e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
        e.ci_lo = std::clamp(e.p_hat - 1.959963984540054 * e.std_err, 0.0, 1.0);
        e.ci_hi = std::clamp(e.p_hat + 1.959963984540054 * e.std_err, 0.0, 1.0);
        return e;
    }

    bool covers(double value) const { return value >= ci_lo && value <= ci_hi; }
};

}  // namespace tailrisk
