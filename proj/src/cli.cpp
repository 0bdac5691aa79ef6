#include "tailrisk/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "tailrisk/csv.hpp"
#include "tailrisk/dependence.hpp"
#include "tailrisk/diagnostics.hpp"
#include "tailrisk/distributions.hpp"
#include "tailrisk/product_tail.hpp"
#include "tailrisk/quadrature.hpp"
#include "tailrisk/ruin_engine.hpp"

namespace tailrisk::cli {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw ConfigError(msg);
    }
}

std::uint64_t seed_of(const json& config) {
    require(config.contains("seed"), "config: \"seed\" is required");
    const json& s = config.at("seed");
    require(s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0),
            "config: \"seed\" must be a non-negative integer");
    return s.get<std::uint64_t>();
}

template <class T>
T get_or(const json& config, const char* key, T fallback) {
    if (!config.contains(key)) {
        return fallback;
    }
    try {
        return config.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for \"") + key + "\"");
    }
}

Distribution law(const json& config, const char* key) {
    require(config.contains(key), std::string("config: \"") + key + "\" is required");
    return Distribution::from_json(config.at(key));
}

DependenceModel dependence_of(const json& config, const Distribution& F, const Distribution& G) {
    if (!config.contains("dependence")) {
        return DependenceModel::independent();
    }
    return DependenceModel::from_json(config.at("dependence"), F, G);
}

std::string header_block(const std::string& command, const json& config) {
    std::ostringstream h;
    h << "# tool: tailrisk " << kToolVersion << '\n';
    h << "# command: " << command << '\n';
    h << "# config_hash: fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << config_hash(config)
      << std::dec << '\n';
    h << "# seed: " << seed_of(config) << '\n';
    return h.str();
}

json meta(const std::string& command, const json& config) {
    std::ostringstream hash;
    hash << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
    return {{"tool", std::string("tailrisk ") + kToolVersion},
            {"command", command},
            {"config_hash", hash.str()},
            {"seed", seed_of(config)}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), "cannot open output file " + path);
    f << text;
    require(static_cast<bool>(f), "failed writing " + path);
}

std::string summary_path(const std::string& out_path) {
    std::filesystem::path p(out_path);
    if (p.extension() == ".csv") {
        return p.replace_extension(".json").string();
    }
    return out_path + ".json";
}

// CSV to the file (or `out`), summary to <out>.json (or `err`).
void emit(const std::string& csv, const json& summary, const std::string& out_path, std::ostream& out,
          std::ostream& err) {
    if (out_path.empty()) {
        out << csv;
        if (!summary.is_null()) {
            err << summary.dump(2) << '\n';
        }
        return;
    }
    write_text(out_path, csv);
    if (!summary.is_null()) {
        write_text(summary_path(out_path), summary.dump(2) + "\n");
    }
}

std::vector<double> grid_of(const json& config) {
    require(config.contains("x_grid"), "config: \"x_grid\" is required");
    return parse_x_grid(config.at("x_grid"));
}

}  // namespace

std::vector<double> parse_x_grid(const json& spec) {
    std::vector<double> grid;
    try {
        if (spec.is_array()) {
            grid = spec.get<std::vector<double>>();
        } else if (spec.is_object()) {
            const double from = spec.at("from").get<double>();
            const double to = spec.at("to").get<double>();
            const int points = spec.at("points").get<int>();
            require(points >= 2 && from > 0.0 && to > from,
                    "x_grid: geometric grid needs 0 < from < to and points >= 2");
            const double r = std::log(to / from) / (points - 1);
            for (int k = 0; k < points; ++k) {
                grid.push_back(k == points - 1 ? to : from * std::exp(r * k));
            }
        } else {
            throw ConfigError("x_grid: expected a list or {from, to, points}");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("x_grid: ") + e.what());
    }
    require(!grid.empty(), "x_grid: empty");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        require(grid[k] > grid[k - 1], "x_grid: must be strictly increasing");
    }
    return grid;
}

std::uint64_t config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

json load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "cannot read config " + path);
    json config;
    try {
        config = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    require(config.is_object(), "config: top level must be an object");
    if (seed_override) {
        config["seed"] = *seed_override;
    }
    seed_of(config);
    return config;
}

int cmd_product_tail(const json& config, const std::string& out_path, std::ostream& out, std::ostream& err) {
    const Distribution F = law(config, "F");
    const Distribution G = law(config, "G");
    const DependenceModel model = dependence_of(config, F, G);
    require_valid(model, F, G);
    const auto grid = grid_of(config);
    const std::uint64_t seed = seed_of(config);
    const int i = get_or(config, "i", 1);
    require(i >= 1, "config: \"i\" must be >= 1");
    const auto methods = get_or(config, "methods", std::vector<std::string>{"exact", "quadrature"});
    bool exact = false;
    bool quad = false;
    bool mc = false;
    for (const auto& m : methods) {
        if (m == "exact") {
            exact = true;
        } else if (m == "quadrature") {
            quad = true;
        } else if (m == "montecarlo") {
            mc = true;
        } else {
            throw ConfigError("config: unknown method \"" + m + "\"");
        }
    }
    require(exact || quad || mc, "config: no methods selected");
    require(!exact || i == 1, "config: the exact method is available for i = 1 only");
    const auto paths = get_or<std::uint64_t>(config, "paths", 1'000'000);
    require(!mc || paths >= 1, "config: \"paths\" must be positive");

    std::ostringstream csv;
    csv << header_block("product-tail", config);
    csv << "x,i";
    if (exact) {
        csv << ",exact";
    }
    if (quad) {
        csv << ",asym,asym_err";
    }
    if (mc) {
        csv << ",mc,mc_std_err,mc_ci_lo,mc_ci_hi";
    }
    csv << '\n';
    bool warned = false;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid[k];
        csv << format_number(x) << ',' << i;
        if (exact) {
            csv << ',' << format_number(exact_product_tail(F, G, model, x));
        }
        if (quad) {
            const TailValue t = iterated_tail(F, G, model, i, x);
            warned = warned || t.warning;
            csv << ',' << format_number(t.value) << ',' << format_number(t.abs_error);
        }
        if (mc) {
            RandomStream rng(seed, k);
            const BinomialEstimate b = mc_product_tail(model, F, G, i, x, paths, rng);
            csv << ',' << format_number(b.p_hat) << ',' << format_number(b.std_err) << ','
                << format_number(b.ci_lo) << ',' << format_number(b.ci_hi);
        }
        csv << '\n';
    }
    if (warned) {
        err << "warning: quadrature error estimate above 1% of the value at some grid points\n";
    }
    emit(csv.str(), json(), out_path, out, err);
    return kOk;
}

int cmd_ruin(const json& config, const std::string& out_path, std::ostream& out, std::ostream& err) {
    const Distribution F = law(config, "F");
    const Distribution G = law(config, "G");
    const DependenceModel model = dependence_of(config, F, G);
    const int horizon = get_or(config, "horizon", 1);
    const RiskModelSpec spec(F, G, model, horizon);
    const auto grid = grid_of(config);
    const std::uint64_t seed = seed_of(config);
    const auto paths = get_or<std::uint64_t>(config, "paths", 1'000'000);
    const int chunks = get_or(config, "chunks", 1);
    require(chunks >= 1, "config: \"chunks\" must be >= 1");
    require(paths >= 1000, "config: \"paths\" must be >= 1000");

    const auto rows = compare_ruin(spec, grid, paths, seed, chunks);
    std::ostringstream csv;
    csv << header_block("ruin", config);
    write_comparison_csv(csv, rows);

    json summary = meta("ruin", config);
    json jrows = json::array();
    for (const auto& r : rows) {
        jrows.push_back({{"x", r.mc.x},
                         {"psi_hat", r.mc.p_hat},
                         {"std_err", r.mc.std_err},
                         {"asym_sum", r.asym_sum},
                         {"ratio", r.ratio},
                         {"ratio_se", r.ratio_se},
                         {"asym_within_ci", r.mc.ci_lo <= r.asym_sum && r.asym_sum <= r.mc.ci_hi},
                         {"ratio_within_2se_of_1", std::abs(r.ratio - 1.0) <= 2.0 * r.ratio_se},
                         {"asym_exceeds_one", r.asym_sum > 1.0},
                         {"asym_warning", r.asym_warning},
                         {"trigger_histogram", r.mc.trigger_histogram}});
    }
    summary["horizon"] = horizon;
    summary["paths"] = paths;
    summary["rows"] = std::move(jrows);
    emit(csv.str(), summary, out_path, out, err);
    return kOk;
}

int cmd_verify(const json& config, const std::string& out_path, std::ostream& out, std::ostream& err) {
    seed_of(config);
    require(config.contains("probes") && config.at("probes").is_array(), "config: \"probes\" list is required");
    const Distribution F = law(config, "F");
    std::optional<Distribution> G;
    if (config.contains("G")) {
        G = law(config, "G");
    }
    std::vector<double> default_grid;
    if (config.contains("x_grid")) {
        default_grid = grid_of(config);
    }

    std::ostringstream csv;
    csv << header_block("verify", config);
    csv << "probe,x,ratio,target,deviation\n";
    json summary = meta("verify", config);
    json reports = json::array();
    for (const json& p : config.at("probes")) {
        require(p.is_object() && p.contains("type"), "probe: expected an object with a \"type\"");
        const std::string type = p.at("type").get<std::string>();
        const auto grid = p.contains("x_grid") ? parse_x_grid(p.at("x_grid")) : default_grid;
        require(!grid.empty(), "probe " + type + ": no x_grid");
        const double tol = get_or(p, "tolerance", 0.01);
        const std::string which = get_or<std::string>(p, "law", "F");
        require(which == "F" || (which == "G" && G), "probe " + type + ": law must be F or G (with G given)");
        const Distribution& V = which == "F" ? F : *G;
        auto need_G = [&]() -> const Distribution& {
            require(G.has_value(), "probe " + type + ": needs G");
            return *G;
        };

        ProbeReport rep;
        json extra;
        if (type == "long_tail") {
            const double gamma = get_or(p, "gamma", 0.0);
            rep = summarize_probe(type, long_tail_ratio(V, gamma, get_or(p, "t", 1.0), grid), tol);
        } else if (type == "convolution") {
            const auto cp = convolution_tail_ratio(V, get_or(p, "gamma", 0.0), grid,
                                                   get_or<std::size_t>(p, "grid_points", 1u << 16));
            rep = summarize_probe(type, cp.points, tol);
            extra["c"] = cp.c;
            extra["oracle_mass"] = cp.mass;
        } else if (type == "assumption_b") {
            const Distribution& g = need_G();
            const DependenceModel model = dependence_of(config, F, g);
            require_valid(model, F, g);
            const auto ab = assumption_b_ratio(
                g, [&](double x) { return exact_product_tail(F, g, model, x); }, get_or(p, "b", 1.0), grid);
            rep = summarize_probe(type, ab.points, tol);
            rep.note = ab.note;
        } else if (type == "product_class") {
            const Distribution& g = need_G();
            const DependenceModel model = dependence_of(config, F, g);
            rep = verify_product_class(F, g, model, get_or(p, "gamma", 0.0), get_or(p, "t", 1.0), grid, tol);
        } else {
            throw ConfigError("probe: unknown type \"" + type + "\"");
        }
        for (const auto& pt : rep.points) {
            csv << type << ',' << format_number(pt.x) << ',' << format_number(pt.ratio) << ','
                << format_number(pt.target) << ',' << format_number(pt.deviation) << '\n';
        }
        json jr = rep.to_json();
        if (!extra.is_null()) {
            jr.update(extra);
        }
        reports.push_back(std::move(jr));
    }
    summary["probes"] = std::move(reports);
    emit(csv.str(), summary, out_path, out, err);
    return kOk;
}

int cmd_validate_model(const json& config, const std::string& out_path, std::ostream& out, std::ostream& err) {
    const Distribution F = law(config, "F");
    const Distribution G = law(config, "G");
    const DependenceModel model = dependence_of(config, F, G);
    const ValidityReport rep = validate(model, F, G);
    json doc = meta("validate-model", config);
    doc["model"] = model.to_json();
    doc["report"] = rep.to_json();
    doc["ok"] = rep.ok();
    const std::string text = doc.dump(2) + "\n";
    if (out_path.empty()) {
        out << text;
    } else {
        write_text(out_path, text);
    }
    if (!rep.ok()) {
        for (const auto& c : rep.checks) {
            if (!c.passed && !c.advisory) {
                err << "invalid model: " << c.name << ": " << c.detail << '\n';
            }
        }
        return kConfigError;
    }
    return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tail asymptotics of dependent products and finite-time ruin"};
    app.set_version_flag("--version", std::string("tailrisk ") + kToolVersion);
    app.require_subcommand(1);

    struct Options {
        std::string config;
        std::string out;
        std::optional<std::uint64_t> seed;
    };
    Options opt;
    auto add = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
        sub->add_option("--out", opt.out, "output path; summaries go to the same path with .json");
        sub->add_option("--seed", opt.seed, "overrides the config seed");
        return sub;
    };
    CLI::App* product = add("product-tail", "tail of the product XY by exact, quadrature and MC methods");
    CLI::App* ruin = add("ruin", "Monte Carlo ruin probability against the asymptotic sum");
    CLI::App* verify = add("verify", "distribution class probes");
    CLI::App* validate_cmd = add("validate-model", "dependence model validity report");

    std::ostringstream cli_out;
    std::ostringstream cli_err;
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, cli_out, cli_err);
        out << cli_out.str();
        err << cli_err.str();
        return code == 0 ? kOk : kConfigError;
    }

    try {
        const json config = load_config(opt.config, opt.seed);
        if (product->parsed()) {
            return cmd_product_tail(config, opt.out, out, err);
        }
        if (ruin->parsed()) {
            return cmd_ruin(config, opt.out, out, err);
        }
        if (verify->parsed()) {
            return cmd_verify(config, opt.out, out, err);
        }
        if (validate_cmd->parsed()) {
            return cmd_validate_model(config, opt.out, out, err);
        }
        return kConfigError;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumericError;
    } catch (const SamplerStuckError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumericError;
    } catch (const json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumericError;
    }
}

}  // namespace tailrisk::cli
