#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace eitcool::cli {

namespace {

Json atom_defaults() {
  return {{"omega_sigma_plus", 18.03}, {"omega_sigma_minus", 16.74}, {"omega_pi", 6.67},
          {"delta_d", 51.07},          {"delta_p", 55.6},            {"delta_B", 4.6},
          {"gamma", 21.0},             {"stark_target", 0.0},        {"stark_branch", "sigma_minus"}};
}

Json mode_defaults() {
  return {{"nu", 2.38}, {"mass", 170.936323}, {"wavelength", 369.5}, {"n_max", 25}};
}

Json crystal_defaults() {
  return {{"n_ions", 12},     {"mass", 170.936323}, {"omega_x", 0.34},
          {"omega_y", 1.22},  {"omega_z", 0.42},    {"restarts", 20}};
}

Json range(double start, double stop, int points) {
  return {{"start", start}, {"stop", stop}, {"points", points}};
}

std::string type_name(const Json& v) {
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Returns the schema with the value's entries merged in.
Json check(const Json& value, const Json& schema, const std::string& path) {
  auto fail = [&](const std::string& expected) {
    throw ConfigError(path + ": expected " + expected + ", got " + type_name(value));
  };
  if (schema.is_object()) {
    if (!value.is_object()) fail("object");
    Json out = schema;
    for (const auto& [key, v] : value.items()) {
      if (!schema.contains(key)) throw ConfigError(join(path, key) + ": unknown key");
      out[key] = check(v, schema[key], join(path, key));
    }
    return out;
  }
  if (schema.is_array()) {
    if (!value.is_array()) fail("array");
    const Json element = schema.empty() ? Json(0.0) : schema[0];
    for (std::size_t i = 0; i < value.size(); ++i) {
      check(value[i], element, path + "[" + std::to_string(i) + "]");
    }
    return value;
  }
  if (schema.is_number_integer()) {
    if (!value.is_number_integer()) fail("integer");
  } else if (schema.is_number()) {
    if (!value.is_number()) fail("number");
  } else if (schema.is_boolean()) {
    if (!value.is_boolean()) fail("boolean");
  } else if (schema.is_string()) {
    if (!value.is_string()) fail("string");
  }
  return value;
}

}  // namespace

Json default_params(const std::string& kind) {
  if (kind == "spectrum") {
    Json atom = atom_defaults();
    atom["omega_sigma_plus"] = 17.0;
    atom["omega_sigma_minus"] = 17.0;
    atom["omega_pi"] = 0.5;
    atom["delta_d"] = 55.0;
    atom["delta_p"] = 55.0;
    return {{"atom", atom}, {"grid", range(30.0, 80.0, 400)}, {"numeric", true}, {"nu", 0.0}};
  }
  if (kind == "cool") {
    return {{"atom", atom_defaults()}, {"mode", mode_defaults()}, {"nbar0", 7.0},
            {"heating_per_ms", 0.67},  {"t_max", 150.0},          {"points", 61},
            {"ions", 1},               {"rel_tol", 1e-8},         {"abs_tol", 1e-10}};
  }
  if (kind == "scan-detuning") {
    return {{"atom", atom_defaults()}, {"mode", mode_defaults()}, {"nbar0", 7.0},
            {"heating_per_ms", 0.67},  {"t_fix", 65.0},           {"detunings", range(3.0, 6.0, 25)},
            {"rel_tol", 1e-8},         {"abs_tol", 1e-10}};
  }
  if (kind == "scan-power") {
    return {{"atom", atom_defaults()},
            {"mode", mode_defaults()},
            {"beam", "drive"},
            {"powers", {0.25, 0.5, 1.0, 1.5, 2.0}},
            {"nbar0", 7.0},
            {"heating_per_ms", 0.67},
            {"coarse", range(3.5, 5.5, 5)},
            {"t_fix", 40.0},
            {"t_max", 100.0},
            {"points", 21},
            {"rel_tol", 1e-8},
            {"abs_tol", 1e-10}};
  }
  if (kind == "modes") return {{"crystal", crystal_defaults()}};
  if (kind == "sideband") {
    return {{"crystal", crystal_defaults()},
            {"mode", -1},
            {"n_max", 40},
            {"rabi", 0.2},
            {"raman_wavelength", 355.0},
            {"raman_angle", 90.0},
            {"nbar", 1.04},
            {"t_max", 0.0},
            {"points", 60},
            {"shots", 200},
            {"nbar_guess", 0.5},
            {"data_blue", ""},
            {"data_red", ""}};
  }
  if (kind == "odf") {
    return {{"crystal", crystal_defaults()},
            {"mode", -1},
            {"tau", 50.0},
            {"tau_pi", 2.0},
            {"gamma_D_per_s", 0.0},
            {"rabi", 0.02},
            {"raman_wavelength", 355.0},
            {"raman_angle", 90.0},
            {"offset", 0.37},
            {"nbars", Json::array()},
            {"spectrum", range(-1.0, 2.0, 301)},
            {"curve", {{"nbar_max", 20.0}, {"points", 81}}},
            {"heights", Json::array()},
            {"delays_ms", Json::array()}};
  }
  if (kind == "stark") {
    return {{"beam", {{"omega_plus", 18.03}, {"omega_minus", 16.74}, {"omega_pi", 1.72}, {"delta", 51.07}}},
            {"delta_P", 2105.0},
            {"delta_S", 12642.812},
            {"delta_B", 4.6},
            {"gamma_clock_per_s", 2e6},
            {"gamma_zeeman_per_s", 2e6},
            {"guess",
             {{"omega_plus", 0.0},
              {"omega_minus", 0.0},
              {"omega_pi", 0.0},
              {"gamma_clock_per_s", 1e6},
              {"gamma_zeeman_per_s", 1e6}}},
            {"points", 300},
            {"periods", 6.0},
            {"sigma", 0.01},
            {"shots", 0},
            {"data", {{"clock", ""}, {"zeeman_plus", ""}, {"zeeman_minus", ""}}}};
  }
  throw ConfigError("kind: unknown kind '" + kind + "'");
}

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    // a bare preset name, or a preset file name that is not on disk
    const auto& all = presets();
    const auto it = all.find(path.stem().string());
    if (it != all.end() && !std::filesystem::exists(path)) return it->second;
    throw ConfigError(path.string() + ": cannot open config");
  }
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment + ": expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  Json* node = &config;
  std::stringstream ss(key);
  std::string part, walked;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ConfigError(key + ": empty path component");
    walked = join(walked, parts[i]);
    if (!node->is_object()) throw ConfigError(walked + ": parent is not an object");
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = value;
    } else {
      if (!node->contains(parts[i])) (*node)[parts[i]] = Json::object();
      node = &(*node)[parts[i]];
    }
  }
}

Json resolve(const Json& config) {
  if (!config.is_object()) throw ConfigError("config: expected object, got " + type_name(config));
  if (!config.contains("kind")) throw ConfigError("kind: missing");
  if (!config["kind"].is_string()) {
    throw ConfigError("kind: expected string, got " + type_name(config["kind"]));
  }
  const std::string kind = config["kind"];
  if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end()) {
    throw ConfigError("kind: unknown kind '" + kind + "'");
  }
  const Json schema = {{"kind", kind},
                       {"output_dir", "out"},
                       {"seed", 1},
                       {"params", default_params(kind)}};
  Json out = check(config, schema, "");
  if (out["seed"].get<std::int64_t>() < 0) throw ConfigError("seed: must be >= 0");
  return out;
}

std::string config_hash(const Json& resolved) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : resolved.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace eitcool::cli
