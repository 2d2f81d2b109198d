#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "eitcool/errors.hpp"

namespace eitcool::cli {

using Json = nlohmann::ordered_json;

// Bad config; the message starts with the offending key path.
class ConfigError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

inline const std::vector<std::string> kKinds = {"spectrum", "cool",     "scan-detuning",
                                                "scan-power", "modes",  "sideband",
                                                "odf",      "stark"};

/// Default params object of a kind; it doubles as the schema.
Json default_params(const std::string& kind);

Json load_config(const std::filesystem::path& path);

/// `a.b.c=value`; value is parsed as JSON and otherwise taken as a string.
void apply_override(Json& config, const std::string& assignment);

/// Checks keys and types against the schema and fills in defaults.
Json resolve(const Json& config);

/// FNV-1a over the compact dump of the resolved config, 16 hex digits.
std::string config_hash(const Json& resolved);

const std::map<std::string, Json>& presets();

struct RunReport {
  std::vector<std::string> artifacts;  // file names inside output_dir
  double wall_time = 0;                // s
};

/// Runs a resolved config and writes its artifacts and manifest.json.
RunReport run(const Json& resolved);

// Artifact helpers shared with the tests.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string format_number(double v);

/// Rows of numbers; a first line that does not parse is taken as a header.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path);

}  // namespace eitcool::cli
