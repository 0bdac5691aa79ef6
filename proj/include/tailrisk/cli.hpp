#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace tailrisk::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3 };

/// Raised for malformed or inconsistent experiment configs.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Explicit list, or geometric {"from", "to", "points"}. Strictly increasing.
std::vector<double> parse_x_grid(const nlohmann::json& spec);

/// 64-bit FNV-1a of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);

/// Loads the JSON config and applies a --seed override. Throws ConfigError.
nlohmann::json load_config(const std::string& path, std::optional<std::uint64_t> seed_override);

/// Subcommands on a loaded config. CSV (or JSON for validate-model) goes to
/// `out_path`, or to `out` when empty; summaries go next to it as .json.
int cmd_product_tail(const nlohmann::json& config, const std::string& out_path, std::ostream& out, std::ostream& err);
int cmd_ruin(const nlohmann::json& config, const std::string& out_path, std::ostream& out, std::ostream& err);
int cmd_verify(const nlohmann::json& config, const std::string& out_path, std::ostream& out, std::ostream& err);
int cmd_validate_model(const nlohmann::json& config, const std::string& out_path, std::ostream& out,
                       std::ostream& err);

/// Full command line without the program name, e.g. {"ruin", "--config", "c.json"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tailrisk::cli
