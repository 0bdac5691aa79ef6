#include "tailrisk/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tailrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr QuadOptions kKernelQuad{1e-13, 1e-300, 4000};

// Points of the support used for grid checks: atoms of a discrete law,
// otherwise mid-cell quantiles plus the finite endpoints.
std::vector<double> support_grid(const Distribution& d, int cells = 64) {
    if (d.is_discrete()) {
        return d.atoms();
    }
    std::vector<double> pts;
    pts.reserve(static_cast<std::size_t>(cells) + 2);
    if (std::isfinite(d.left_endpoint())) {
        pts.push_back(d.left_endpoint());
    }
    for (int k = 0; k < cells; ++k) {
        pts.push_back(d.quantile((k + 0.5) / cells));
    }
    if (std::isfinite(d.right_endpoint())) {
        pts.push_back(d.right_endpoint());
    }
    return pts;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

// Range of h over the support as (inf, sup).
std::pair<double, double> h_range(const DependenceModel& model, const Distribution& G) {
    return std::visit(Overloaded{
                          [](const dependence::Independent&) { return std::pair{1.0, 1.0}; },
                          [&G](const dependence::Fgm& m) {
                              const double lmin = G.atom_mass(G.left_endpoint()) - 1.0;
                              const double lmax = 1.0 - G.atom_mass(G.right_endpoint());
                              const double a = 1.0 + m.theta * lmin;
                              const double b = 1.0 + m.theta * lmax;
                              return std::pair{std::min(a, b), std::max(a, b)};
                          },
                          [](const dependence::Sarmanov& m) {
                              const double s = m.theta * m.kernel_x.d1;
                              const double a = 1.0 + s * m.kernel_y.lo;
                              const double b = 1.0 + s * m.kernel_y.hi;
                              return std::pair{std::min(a, b), std::max(a, b)};
                          },
                      },
                      model.kind());
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernels

double KernelSpec::sup_abs() const { return std::max(std::abs(lo), std::abs(hi)); }

double KernelSpec::operator()(const Distribution& marginal, double v) const {
    if (form == KernelForm::Fgm) {
        return marginal.cdf(v) + marginal.cdf_left(v) - 1.0;
    }
    if (role == KernelRole::X) {
        return v > 0.0 ? std::exp(-v) - centering : 0.0;
    }
    return std::exp(-v) - centering;
}

KernelSpec KernelSpec::exp_x(const Distribution& F) {
    const double positive_mass = F.tail(0.0);
    if (!(positive_mass > 0.0)) {
        throw std::invalid_argument("exp kernel for X needs P(X > 0) > 0");
    }
    const QuadResult num = expectation(F, [](double u) { return std::exp(-u); }, 0.0, kInf, {}, kKernelQuad);
    if (!num.converged) {
        throw NumericError("exp kernel centering did not converge", num.value, num.abs_error);
    }
    KernelSpec k;
    k.form = KernelForm::Exp;
    k.role = KernelRole::X;
    k.centering = num.value / positive_mass;
    if (F.is_discrete()) {
        k.lo = kInf;
        k.hi = -kInf;
        for (double v : F.atoms()) {
            const double phi = k(F, v);
            k.lo = std::min(k.lo, phi);
            k.hi = std::max(k.hi, phi);
        }
    } else {
        const double start = std::max(F.left_endpoint(), 0.0);
        k.hi = std::exp(-start) - k.centering;
        k.lo = std::exp(-F.right_endpoint()) - k.centering;
        if (F.left_endpoint() < 0.0) {
            k.lo = std::min(k.lo, 0.0);
            k.hi = std::max(k.hi, 0.0);
        }
    }
    k.d1 = -k.centering;
    return k;
}

KernelSpec KernelSpec::exp_y(const Distribution& G) {
    const QuadResult m = expectation(G, [](double y) { return std::exp(-y); }, -kInf, kInf, {}, kKernelQuad);
    if (!m.converged) {
        throw NumericError("exp kernel centering did not converge", m.value, m.abs_error);
    }
    KernelSpec k;
    k.form = KernelForm::Exp;
    k.role = KernelRole::Y;
    k.centering = m.value;
    k.lo = std::exp(-G.right_endpoint()) - k.centering;
    k.hi = std::exp(-G.left_endpoint()) - k.centering;
    k.d1 = -k.centering;
    return k;
}

KernelSpec KernelSpec::fgm(KernelRole role, const Distribution& marginal) {
    KernelSpec k;
    k.form = KernelForm::Fgm;
    k.role = role;
    k.lo = marginal.atom_mass(marginal.left_endpoint()) - 1.0;
    k.hi = 1.0 - marginal.atom_mass(marginal.right_endpoint());
    k.d1 = 1.0;
    return k;
}

KernelSpec KernelSpec::bind(KernelForm form, KernelRole role, const Distribution& marginal) {
    if (form == KernelForm::Fgm) {
        return fgm(role, marginal);
    }
    return role == KernelRole::X ? exp_x(marginal) : exp_y(marginal);
}

// ---------------------------------------------------------------------------
// Model

DependenceModel DependenceModel::independent() { return DependenceModel(dependence::Independent{}); }

DependenceModel DependenceModel::fgm(double theta) {
    if (!(theta >= -1.0 && theta <= 1.0)) {
        throw std::invalid_argument("fgm: theta must lie in [-1, 1]");
    }
    return DependenceModel(dependence::Fgm{theta});
}

DependenceModel DependenceModel::sarmanov(double theta, KernelSpec kernel_x, KernelSpec kernel_y) {
    if (!std::isfinite(theta)) {
        throw std::invalid_argument("sarmanov: theta must be finite");
    }
    if (kernel_x.role != KernelRole::X || kernel_y.role != KernelRole::Y) {
        throw std::invalid_argument("sarmanov: kernels bound to the wrong coordinate");
    }
    return DependenceModel(dependence::Sarmanov{theta, kernel_x, kernel_y});
}

std::string DependenceModel::kind_name() const {
    return std::visit(Overloaded{
                          [](const dependence::Independent&) { return std::string("independent"); },
                          [](const dependence::Fgm&) { return std::string("fgm"); },
                          [](const dependence::Sarmanov&) { return std::string("sarmanov"); },
                      },
                      kind_);
}

double DependenceModel::theta() const {
    return std::visit(Overloaded{
                          [](const dependence::Independent&) { return 0.0; },
                          [](const dependence::Fgm& m) { return m.theta; },
                          [](const dependence::Sarmanov& m) { return m.theta; },
                      },
                      kind_);
}

nlohmann::json DependenceModel::to_json() const {
    using nlohmann::json;
    auto kernel_json = [](const KernelSpec& k) {
        json j{{"form", k.form == KernelForm::Exp ? "exp" : "fgm"}};
        if (k.form == KernelForm::Exp) {
            j["centering"] = k.centering;
        }
        return j;
    };
    return std::visit(Overloaded{
                          [](const dependence::Independent&) { return json{{"kind", "independent"}}; },
                          [](const dependence::Fgm& m) { return json{{"kind", "fgm"}, {"theta", m.theta}}; },
                          [&](const dependence::Sarmanov& m) {
                              return json{{"kind", "sarmanov"},
                                          {"theta", m.theta},
                                          {"kernel_x", kernel_json(m.kernel_x)},
                                          {"kernel_y", kernel_json(m.kernel_y)}};
                          },
                      },
                      kind_);
}

DependenceModel DependenceModel::from_json(const nlohmann::json& j, const Distribution& F, const Distribution& G) {
    if (!j.is_object() || !j.contains("kind")) {
        throw std::invalid_argument("dependence: expected an object with a \"kind\" field");
    }
    const std::string kind = j.at("kind").get<std::string>();
    auto theta = [&] {
        if (!j.contains("theta") || !j.at("theta").is_number()) {
            throw std::invalid_argument("dependence " + kind + ": missing numeric \"theta\"");
        }
        return j.at("theta").get<double>();
    };
    if (kind == "independent") {
        return independent();
    }
    if (kind == "fgm") {
        return fgm(theta());
    }
    if (kind == "sarmanov") {
        auto form = [&](const char* key) {
            if (!j.contains(key)) {
                throw std::invalid_argument(std::string("dependence sarmanov: missing \"") + key + "\"");
            }
            const std::string f = j.at(key).value("form", "");
            if (f == "exp") {
                return KernelForm::Exp;
            }
            if (f == "fgm") {
                return KernelForm::Fgm;
            }
            throw std::invalid_argument("dependence sarmanov: kernel form must be \"exp\" or \"fgm\"");
        };
        return sarmanov(theta(), KernelSpec::bind(form("kernel_x"), KernelRole::X, F),
                        KernelSpec::bind(form("kernel_y"), KernelRole::Y, G));
    }
    throw std::invalid_argument("dependence: unknown kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// h-function

double lambda_fgm(const Distribution& G, double y) { return G.cdf(y) + G.cdf_left(y) - 1.0; }

double psi_sarmanov(const KernelSpec& kernel_y, const Distribution& G, double y) {
    const bool outside = y < G.left_endpoint() || y > G.right_endpoint() || (G.is_discrete() && G.atom_mass(y) == 0.0);
    if (outside) {
        throw std::domain_error("psi: y = " + fmt(y) + " is outside the support of G");
    }
    return kernel_y(G, y);
}

double h_value(const DependenceModel& model, const Distribution& G, double y) {
    const double h = std::visit(Overloaded{
                                    [](const dependence::Independent&) { return 1.0; },
                                    [&](const dependence::Fgm& m) { return 1.0 + m.theta * lambda_fgm(G, y); },
                                    [&](const dependence::Sarmanov& m) {
                                        return 1.0 + m.theta * m.kernel_x.d1 * psi_sarmanov(m.kernel_y, G, y);
                                    },
                                },
                                model.kind());
    if (!(h > 0.0)) {
        throw ModelInvalidError("h(" + fmt(y) + ") = " + fmt(h) + " is not positive");
    }
    return h;
}

double h_bound(const DependenceModel& model, const Distribution& G) { return h_range(model, G).second; }

// ---------------------------------------------------------------------------
// Validation

bool ValidityReport::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const ValidityCheck& c) { return c.advisory || c.passed; });
}

const ValidityCheck* ValidityReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

nlohmann::json ValidityReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name},
                       {"passed", c.passed},
                       {"advisory", c.advisory},
                       {"value", c.value},
                       {"detail", c.detail}});
    }
    return {{"ok", ok()}, {"c", c}, {"h_inf", h_inf}, {"h_sup", h_sup}, {"checks", arr}};
}

ValidityReport validate(const DependenceModel& model, const Distribution& F, const Distribution& G) {
    ValidityReport rep;
    auto add = [&rep](std::string name, bool passed, double value, std::string detail, bool advisory = false) {
        rep.checks.push_back({std::move(name), passed, advisory, value, std::move(detail)});
    };

    add("g_nonnegative", G.left_endpoint() >= 0.0, G.left_endpoint(), "left endpoint of G must be >= 0");

    const auto [h_inf, h_sup] = h_range(model, G);
    rep.h_inf = h_inf;
    rep.h_sup = h_sup;

    std::visit(
        Overloaded{
            [&](const dependence::Independent&) {
                rep.c = 1.0;
                add("h_lower_bound", true, 1.0, "h = 1");
            },
            [&](const dependence::Fgm& m) {
                add("theta_range", std::abs(m.theta) <= 1.0, m.theta, "FGM requires |theta| <= 1");
                if (m.theta == 1.0) {
                    const double p = G.atom_mass(G.left_endpoint());
                    add("boundary_atom", p > 0.0, p,
                        "theta = 1 needs P(Y = left endpoint) > 0; witness P = " + fmt(p));
                } else if (m.theta == -1.0) {
                    const double p = G.atom_mass(G.right_endpoint());
                    add("boundary_atom", p > 0.0, p,
                        "theta = -1 needs P(Y = right endpoint) > 0; witness P = " + fmt(p));
                }
                rep.c = std::abs(m.theta) < 1.0 ? 1.0 - std::abs(m.theta) : h_inf;
                add("h_lower_bound", rep.c > 0.0, rep.c, "c with P(h(Y) >= c) = 1; inf h = " + fmt(h_inf));
            },
            [&](const dependence::Sarmanov& m) {
                const auto& kx = m.kernel_x;
                const auto& ky = m.kernel_y;
                const double zero_break[] = {0.0};
                const QuadResult ex =
                    expectation(F, [&](double v) { return kx(F, v); }, -kInf, kInf, zero_break, kKernelQuad);
                const QuadResult ey = expectation(G, [&](double v) { return ky(G, v); }, -kInf, kInf, {}, kKernelQuad);
                add("centering_x", std::abs(ex.value) <= 1e-8, ex.value, "E phi1(X) residual");
                add("centering_y", std::abs(ey.value) <= 1e-8, ey.value, "E phi2(Y) residual");

                // Bilinear in (phi1, phi2): its minimum over the range box sits at a corner.
                double corner = kInf;
                for (double a : {kx.lo, kx.hi}) {
                    for (double b : {ky.lo, ky.hi}) {
                        corner = std::min(corner, 1.0 + m.theta * a * b);
                    }
                }
                add("nonnegativity_corners", corner >= 0.0, corner, "min of 1 + theta phi1 phi2 over kernel ranges");

                double grid_min = kInf;
                double wx = 0.0;
                double wy = 0.0;
                for (double x : support_grid(F)) {
                    for (double y : support_grid(G)) {
                        const double v = 1.0 + m.theta * kx(F, x) * ky(G, y);
                        if (v < grid_min) {
                            grid_min = v;
                            wx = x;
                            wy = y;
                        }
                    }
                }
                add("nonnegativity_grid", grid_min >= 0.0, grid_min,
                    "min density factor on support grid at (" + fmt(wx) + ", " + fmt(wy) + ")");

                add("d1_nonzero", kx.d1 != 0.0, kx.d1, "limit of phi1 at +inf");
                add("d1_positive", kx.d1 > 0.0, kx.d1, "the stated condition asks d1 in (0, inf); negative d1 is admitted",
                    true);

                const double s = m.theta * kx.d1;
                rep.c = std::min(1.0 + s * ky.lo, 1.0 + s * ky.hi);
                add("h_lower_bound", rep.c > 0.0, rep.c, "c = inf of 1 + theta d1 psi(y)");
            },
        },
        model.kind());

    if (rep.c > 0.0 && G.left_endpoint() >= 0.0) {
        const QuadResult eh = expectation(
            G, [&](double y) { return h_value(model, G, y); }, -kInf, kInf, {}, kKernelQuad);
        add("mean_h", std::abs(eh.value - 1.0) <= 1e-8, eh.value, "E h(Y)");

        // Finite-x sup deviation; uniformity is asymptotic and cannot be certified here.
        if (std::isinf(F.right_endpoint())) {
            const double x = F.tail_quantile(1e-6);
            double dev = 0.0;
            for (double y : support_grid(G, 32)) {
                if (y < G.left_endpoint() || y > G.right_endpoint()) {
                    continue;
                }
                const double ratio = conditional_tail_given_y(model, F, G, x, y) / (h_value(model, G, y) * F.tail(x));
                dev = std::max(dev, std::abs(ratio - 1.0));
            }
            add("uniformity_grid", dev < 0.05, dev,
                "sup_y |P(X>x|Y=y)/(h(y)P(X>x)) - 1| at x = " + fmt(x) + "; non-conclusive finite-x evidence", true);
        }
    }
    return rep;
}

void require_valid(const DependenceModel& model, const Distribution& F, const Distribution& G) {
    const ValidityReport rep = validate(model, F, G);
    if (rep.ok()) {
        return;
    }
    std::string msg = "dependence model invalid:";
    for (const auto& c : rep.checks) {
        if (!c.advisory && !c.passed) {
            msg += " " + c.name + " (" + c.detail + ", value " + fmt(c.value) + ");";
        }
    }
    throw ModelInvalidError(msg);
}

// ---------------------------------------------------------------------------
// Conditional law and sampling

double conditional_tail_given_y(const DependenceModel& model, const Distribution& F, const Distribution& G,
                                double x, double y) {
    const double fbar = F.tail(x);
    const double v = std::visit(
        Overloaded{
            [&](const dependence::Independent&) { return fbar; },
            [&](const dependence::Fgm& m) { return fbar * (1.0 + m.theta * F.cdf(x) * lambda_fgm(G, y)); },
            [&](const dependence::Sarmanov& m) {
                const double psi = psi_sarmanov(m.kernel_y, G, y);
                double upper;
                if (m.kernel_x.form == KernelForm::Fgm) {
                    // int_(x,inf) (F(u) + F(u-) - 1) dF(u) telescopes to F(x) (1 - F(x)).
                    upper = F.cdf(x) * fbar;
                } else {
                    const QuadResult r = expectation(F, [&](double u) { return m.kernel_x(F, u); }, std::max(x, 0.0),
                                                     kInf, {}, kKernelQuad);
                    if (!r.converged) {
                        throw NumericError("conditional tail quadrature did not converge", r.value, r.abs_error);
                    }
                    upper = r.value;
                }
                return fbar + m.theta * psi * upper;
            },
        },
        model.kind());
    if (v < -1e-12 || v > 1.0 + 1e-12) {
        throw ModelInvalidError("conditional tail " + fmt(v) + " outside [0, 1] at x = " + fmt(x) + ", y = " + fmt(y));
    }
    return std::clamp(v, 0.0, 1.0);
}

double fgm_conditional_inverse(double k, double w) {
    // k p^2 + (1 - k) p - w = 0; the rationalized root avoids cancellation as k -> 0.
    const double b = 1.0 - k;
    const double p = 2.0 * w / (b + std::sqrt(b * b + 4.0 * k * w));
    return std::clamp(p, 0.0, 1.0);
}

PairSample sample_pair(const DependenceModel& model, const Distribution& F, const Distribution& G,
                       RandomStream& rng) {
    return std::visit(Overloaded{
                          [&](const dependence::Independent&) {
                              const double y = G.sample(rng);
                              const double x = F.sample(rng);
                              return PairSample{x, y, 1};
                          },
                          [&](const dependence::Fgm& m) {
                              const double y = G.sample(rng);
                              const double w = rng.uniform();
                              const double p = fgm_conditional_inverse(m.theta * lambda_fgm(G, y), w);
                              return PairSample{F.quantile(p), y, 1};
                          },
                          [&](const dependence::Sarmanov& m) {
                              const double envelope =
                                  1.0 + std::abs(m.theta) * m.kernel_x.sup_abs() * m.kernel_y.sup_abs();
                              for (int attempt = 1; attempt <= kMaxRejectionAttempts; ++attempt) {
                                  const double x = F.sample(rng);
                                  const double y = G.sample(rng);
                                  const double u = rng.uniform();
                                  const double density = 1.0 + m.theta * m.kernel_x(F, x) * m.kernel_y(G, y);
                                  if (u * envelope <= density) {
                                      return PairSample{x, y, attempt};
                                  }
                              }
                              throw SamplerStuckError("sarmanov rejection sampler exceeded " +
                                                      std::to_string(kMaxRejectionAttempts) + " attempts");
                          },
                      },
                      model.kind());
}

// ---------------------------------------------------------------------------
// Tilted law

TiltedLaw::TiltedLaw(DependenceModel model, Distribution base) : model_(std::move(model)), base_(std::move(base)) {
    if (base_.is_discrete()) {
        const auto atoms = base_.atoms();
        auto probs = base_.atom_probs();
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            probs[k] *= h_value(model_, base_, atoms[k]);
        }
        discrete_ = Distribution::discrete(atoms, probs);
    }
}

double TiltedLaw::tail(double y) const {
    if (discrete_) {
        return discrete_->tail(y);
    }
    const double gbar = base_.tail(y);
    return std::visit(
        Overloaded{
            [&](const dependence::Independent&) { return gbar; },
            // int_(y,inf) (1 + theta (G(v) + G(v-) - 1)) dG(v) = Gbar(y) (1 + theta G(y)).
            [&](const dependence::Fgm& m) { return gbar * (1.0 + m.theta * base_.cdf(y)); },
            [&](const dependence::Sarmanov& m) {
                const double s = m.theta * m.kernel_x.d1;
                if (m.kernel_y.form == KernelForm::Fgm) {
                    return gbar * (1.0 + s * base_.cdf(y));
                }
                const QuadResult r =
                    expectation(base_, [&](double v) { return m.kernel_y(base_, v); }, y, kInf, {}, kKernelQuad);
                return gbar + s * r.value;
            },
        },
        model_.kind());
}

double TiltedLaw::total_mass() const { return tail(-kInf); }

TiltedLaw tilted_g(const DependenceModel& model, const Distribution& G) { return TiltedLaw(model, G); }

}  // namespace tailrisk
