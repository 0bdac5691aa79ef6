#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/random.hpp"

namespace tailrisk {

/// The pair (F, G, model) violates a structural requirement: h <= 0, a
/// negative Sarmanov density factor, a missing boundary atom for |theta| = 1.
class ModelInvalidError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The Sarmanov rejection loop exhausted its attempt budget.
class SamplerStuckError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class KernelForm { Exp, Fgm };
enum class KernelRole { X, Y };

/// A centered, bounded Sarmanov kernel bound to one marginal.
///
///   Exp, role X:  phi1(x) = (exp(-x) - a) 1{x > 0},  a = E[e^-X; X > 0] / P(X > 0)
///   Exp, role Y:  phi2(y) = exp(-y) - m,              m = E e^-Y
///   Fgm:          phi(v)  = V(v) + V(v-) - 1          (2V - 1 at continuity points)
///
/// The Fgm form uses the mid-distribution value at atoms, which keeps the
/// kernel centered for discrete marginals and reproduces the FGM joint
/// survival function exactly.
struct KernelSpec {
    KernelForm form = KernelForm::Fgm;
    KernelRole role = KernelRole::X;
    double centering = 0.0;
    /// Range [lo, hi] of the kernel over the support of its marginal.
    double lo = -1.0;
    double hi = 1.0;
    /// Limit of the kernel at +inf (d1 for the X kernel).
    double d1 = 1.0;

    double sup_abs() const;
    double operator()(const Distribution& marginal, double v) const;

    static KernelSpec exp_x(const Distribution& F);
    static KernelSpec exp_y(const Distribution& G);
    static KernelSpec fgm(KernelRole role, const Distribution& marginal);
    static KernelSpec bind(KernelForm form, KernelRole role, const Distribution& marginal);
};

namespace dependence {
struct Independent {};
struct Fgm {
    double theta;
};
struct Sarmanov {
    double theta;
    KernelSpec kernel_x;
    KernelSpec kernel_y;
};
}  // namespace dependence

class DependenceModel {
public:
    using Kind = std::variant<dependence::Independent, dependence::Fgm, dependence::Sarmanov>;

    static DependenceModel independent();
    /// theta in [-1, 1]. The boundary values need an atom of G at an endpoint;
    /// that part is checked by validate() / require_valid().
    static DependenceModel fgm(double theta);
    static DependenceModel sarmanov(double theta, KernelSpec kernel_x, KernelSpec kernel_y);

    const Kind& kind() const { return kind_; }
    std::string kind_name() const;
    double theta() const;

    nlohmann::json to_json() const;
    /// Kernel constants are recomputed from the marginals.
    static DependenceModel from_json(const nlohmann::json& j, const Distribution& F, const Distribution& G);

private:
    explicit DependenceModel(Kind k) : kind_(std::move(k)) {}
    Kind kind_;
};

struct ValidityCheck {
    std::string name;
    bool passed = true;
    /// Advisory checks are reported but do not fail the model.
    bool advisory = false;
    double value = 0.0;
    std::string detail;
};

struct ValidityReport {
    std::vector<ValidityCheck> checks;
    /// A constant c > 0 with P(h(Y) >= c) = 1, when one exists.
    double c = 0.0;
    /// inf and sup of h over the support of G.
    double h_inf = 1.0;
    double h_sup = 1.0;

    bool ok() const;
    const ValidityCheck* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// G(y) + G(y-) - 1.
double lambda_fgm(const Distribution& G, double y);

/// Assumption-1 factor h(y). Throws ModelInvalidError when h(y) <= 0.
double h_value(const DependenceModel& model, const Distribution& G, double y);

/// psi(y) of the Sarmanov model: the local average of phi2, which equals phi2(y)
/// at atoms and continuity points. Throws std::domain_error off the support.
double psi_sarmanov(const KernelSpec& kernel_y, const Distribution& G, double y);

/// sup of h over the support of G.
double h_bound(const DependenceModel& model, const Distribution& G);

ValidityReport validate(const DependenceModel& model, const Distribution& F, const Distribution& G);

/// Throws ModelInvalidError naming every failed (non-advisory) check.
void require_valid(const DependenceModel& model, const Distribution& F, const Distribution& G);

/// P(X > x | Y = y).
double conditional_tail_given_y(const DependenceModel& model, const Distribution& F, const Distribution& G,
                                double x, double y);

struct PairSample {
    double x;
    double y;
    /// Proposals consumed (always 1 outside the Sarmanov rejection sampler).
    int attempts;
};

inline constexpr int kMaxRejectionAttempts = 1'000'000;

PairSample sample_pair(const DependenceModel& model, const Distribution& F, const Distribution& G,
                       RandomStream& rng);

/// Root in [0, 1] of p (1 - k (1 - p)) = w, the FGM conditional cdf in
/// p = F(x) with k = theta * lambda(y).
double fgm_conditional_inverse(double k, double w);

/// The law G_h(dy) = h(y) G(dy).
class TiltedLaw {
public:
    TiltedLaw(DependenceModel model, Distribution base);

    /// G_h((y, inf)).
    double tail(double y) const;
    double cdf(double y) const { return total_mass() - tail(y); }
    double total_mass() const;
    double right_endpoint() const { return base_.right_endpoint(); }
    double left_endpoint() const { return base_.left_endpoint(); }
    const Distribution& base() const { return base_; }
    const DependenceModel& model() const { return model_; }
    /// Reweighted atoms when the base law is discrete.
    const std::optional<Distribution>& discrete() const { return discrete_; }

private:
    DependenceModel model_;
    Distribution base_;
    std::optional<Distribution> discrete_;
};

TiltedLaw tilted_g(const DependenceModel& model, const Distribution& G);

}  // namespace tailrisk
