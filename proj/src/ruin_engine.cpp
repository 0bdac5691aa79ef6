#include "tailrisk/ruin_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "tailrisk/csv.hpp"
#include "tailrisk/product_tail.hpp"

namespace tailrisk {

RiskModelSpec::RiskModelSpec(Distribution F, Distribution G, DependenceModel model, int horizon)
    : F_(std::move(F)), G_(std::move(G)), model_(std::move(model)), horizon_(horizon) {
    if (horizon_ < 1) {
        throw std::invalid_argument("risk model: horizon must be >= 1");
    }
    if (G_.left_endpoint() < 0.0) {
        throw std::invalid_argument("risk model: discount factor G must be supported on [0, inf)");
    }
    if (F_.atom_mass(0.0) >= 1.0 || G_.atom_mass(0.0) >= 1.0) {
        throw std::invalid_argument("risk model: neither X nor Y may be degenerate at 0");
    }
    require_valid(model_, F_, G_);
}

PathOutcome simulate_path(const RiskModelSpec& spec, RandomStream& rng) {
    PathOutcome out;
    out.partial_sums.reserve(static_cast<std::size_t>(spec.horizon()));
    double discount = 1.0;
    double sum = 0.0;
    out.max_partial_sum = -std::numeric_limits<double>::infinity();
    out.argmax = 0;
    for (int m = 1; m <= spec.horizon(); ++m) {
        const PairSample s = sample_pair(spec.model(), spec.F(), spec.G(), rng);
        discount *= s.y;
        sum += s.x * discount;
        out.partial_sums.push_back(sum);
        if (sum > out.max_partial_sum) {
            out.max_partial_sum = sum;
            out.argmax = m;
        }
    }
    return out;
}

std::pair<double, double> forward_and_backward_sums(const RiskModelSpec& spec, RandomStream& rng) {
    const auto n = static_cast<std::size_t>(spec.horizon());
    std::vector<double> xs(n);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const PairSample s = sample_pair(spec.model(), spec.F(), spec.G(), rng);
        xs[i] = s.x;
        ys[i] = s.y;
    }
    double forward = 0.0;
    double discount = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        discount *= ys[i];
        forward += xs[i] * discount;
    }
    double backward = 0.0;
    discount = 1.0;
    for (std::size_t i = n; i-- > 0;) {
        discount *= ys[i];
        backward += xs[i] * discount;
    }
    return {forward, backward};
}

std::uint64_t RuinEstimate::ruin_count() const {
    return std::accumulate(trigger_histogram.begin(), trigger_histogram.end(), std::uint64_t{0});
}

namespace {

// Per-worker tallies. diff[m][k] is a difference array over grid indices:
// a path whose running maximum first exceeds grid points [k0, k1) at period m
// adds +1 at k0 and -1 at k1.
struct Tally {
    std::vector<std::vector<std::int64_t>> diff;

    Tally(int n, std::size_t grid) : diff(static_cast<std::size_t>(n), std::vector<std::int64_t>(grid + 1, 0)) {}

    void merge(const Tally& o) {
        for (std::size_t m = 0; m < diff.size(); ++m) {
            for (std::size_t k = 0; k < diff[m].size(); ++k) {
                diff[m][k] += o.diff[m][k];
            }
        }
    }
};

void run_block(const RiskModelSpec& spec, const std::vector<double>& grid, std::uint64_t seed, std::uint64_t block,
               std::uint64_t count, Tally& tally) {
    const int n = spec.horizon();
    const auto& F = spec.F();
    const auto& G = spec.G();
    const auto& model = spec.model();
    for (std::uint64_t p = 0; p < count; ++p) {
        // One substream per path: a path's first m periods are the same for
        // every horizon >= m.
        RandomStream rng(seed, block * kPathsPerBlock + p);
        double discount = 1.0;
        double sum = 0.0;
        double running_max = -std::numeric_limits<double>::infinity();
        std::size_t exceeded = 0;
        for (int m = 0; m < n; ++m) {
            const PairSample s = sample_pair(model, F, G, rng);
            discount *= s.y;
            sum += s.x * discount;
            if (sum > running_max) {
                running_max = sum;
                // Grid points strictly below the running maximum are ruined.
                const auto k = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), running_max) -
                                                        grid.begin());
                if (k > exceeded) {
                    tally.diff[static_cast<std::size_t>(m)][exceeded] += 1;
                    tally.diff[static_cast<std::size_t>(m)][k] -= 1;
                    exceeded = k;
                }
            }
        }
    }
}

}  // namespace

std::vector<RuinEstimate> estimate_ruin(const RiskModelSpec& spec, const std::vector<double>& x_grid,
                                        std::uint64_t paths, std::uint64_t seed, int chunks) {
    if (paths < 1000) {
        throw std::invalid_argument("estimate_ruin: need at least 1000 paths");
    }
    if (x_grid.empty()) {
        throw std::invalid_argument("estimate_ruin: empty x grid");
    }
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
        if (!(x_grid[k] > 0.0) || (k > 0 && !(x_grid[k] > x_grid[k - 1]))) {
            throw std::invalid_argument("estimate_ruin: x grid must be positive and strictly increasing");
        }
    }
    const int n = spec.horizon();
    const std::uint64_t blocks = (paths + kPathsPerBlock - 1) / kPathsPerBlock;
    const int workers = static_cast<int>(std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(chunks, 1)), 1,
                                                                   blocks));

    Tally total(n, x_grid.size());
    std::mutex merge_mutex;
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;

    auto work = [&] {
        Tally local(n, x_grid.size());
        try {
            for (std::uint64_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
                const std::uint64_t count = std::min(kPathsPerBlock, paths - b * kPathsPerBlock);
                run_block(spec, x_grid, seed, b, count, local);
            }
        } catch (...) {
            std::lock_guard lock(merge_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
            return;
        }
        std::lock_guard lock(merge_mutex);
        total.merge(local);
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::vector<RuinEstimate> out(x_grid.size());
    std::vector<std::int64_t> running(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < x_grid.size(); ++k) {
        RuinEstimate& e = out[k];
        e.x = x_grid[k];
        e.n = n;
        e.paths = paths;
        e.trigger_histogram.resize(static_cast<std::size_t>(n));
        for (std::size_t m = 0; m < static_cast<std::size_t>(n); ++m) {
            running[m] += total.diff[m][k];
            e.trigger_histogram[m] = static_cast<std::uint64_t>(running[m]);
        }
        const BinomialEstimate b = BinomialEstimate::from_counts(e.ruin_count(), paths);
        e.p_hat = b.p_hat;
        e.std_err = b.std_err;
        e.ci_lo = b.ci_lo;
        e.ci_hi = b.ci_hi;
    }
    return out;
}

AsymptoticRuin asymptotic_ruin(const RiskModelSpec& spec, double x) {
    AsymptoticRuin out;
    for (int i = 1; i <= spec.horizon(); ++i) {
        const TailValue t = iterated_tail(spec.F(), spec.G(), spec.model(), i, x);
        out.terms.push_back(t.value);
        out.value += t.value;
        out.abs_error += t.abs_error;
        out.warning = out.warning || t.warning;
    }
    out.exceeds_one = out.value > 1.0;
    return out;
}

std::vector<RuinComparisonRow> compare_ruin(const RiskModelSpec& spec, const std::vector<double>& x_grid,
                                            std::uint64_t paths, std::uint64_t seed, int chunks) {
    const auto mc = estimate_ruin(spec, x_grid, paths, seed, chunks);
    std::vector<RuinComparisonRow> rows;
    rows.reserve(mc.size());
    for (const auto& e : mc) {
        RuinComparisonRow r;
        r.mc = e;
        r.seed = seed;
        const AsymptoticRuin a = asymptotic_ruin(spec, e.x);
        r.asym_sum = a.value;
        r.asym_warning = a.warning;
        if (a.value > 0.0) {
            r.ratio = e.p_hat / a.value;
            // Delta method with a deterministic denominator; its own numeric
            // error enters in quadrature.
            const double rel_den = a.abs_error / a.value;
            r.ratio_se = std::sqrt(std::pow(e.std_err / a.value, 2) + std::pow(r.ratio * rel_den, 2));
        } else {
            r.ratio = std::numeric_limits<double>::quiet_NaN();
            r.ratio_se = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_comparison_csv(std::ostream& os, const std::vector<RuinComparisonRow>& rows) {
    os << "x,n,psi_hat,std_err,ci_lo,ci_hi,asym_sum,ratio,ratio_se,paths,seed\n";
    for (const auto& r : rows) {
        os << format_number(r.mc.x) << ',' << r.mc.n << ',' << format_number(r.mc.p_hat) << ','
           << format_number(r.mc.std_err) << ',' << format_number(r.mc.ci_lo) << ',' << format_number(r.mc.ci_hi)
           << ',' << format_number(r.asym_sum) << ',' << format_number(r.ratio) << ','
           << format_number(r.ratio_se) << ',' << r.mc.paths << ',' << r.seed << '\n';
    }
}

}  // namespace tailrisk
