#include <omp.h>

#include <CLI11.hpp>
#include <iostream>

#include "cli.hpp"

using namespace eitcool;
using namespace eitcool::cli;

namespace {

Json load(const std::string& path, const std::vector<std::string>& sets) {
  Json config = load_config(path);
  for (const auto& s : sets) apply_override(config, s);
  return resolve(config);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double-EIT cooling toolkit"};
  app.set_version_flag("--version", std::string(EITCOOL_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  int jobs = 0;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config (or a preset name)");
  run_cmd->add_option("config", config_path, "Config file")->required();
  run_cmd->add_option("--set", sets, "Override a config key, e.g. params.nbar0=5");
  run_cmd->add_option("--jobs", jobs, "Worker cap")->envname("EITCOOL_JOBS")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check a config against the schema");
  validate_cmd->add_option("config", config_path, "Config file")->required();
  validate_cmd->add_option("--set", sets, "Override a config key");

  std::string export_dir;
  auto* list_cmd = app.add_subcommand("list-presets", "Print the bundled preset names");
  list_cmd->add_option("--write", export_dir, "Also write each preset as <dir>/<name>.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*list_cmd) {
      for (const auto& [name, config] : presets()) {
        std::cout << name << '\n';
        if (!export_dir.empty()) {
          std::filesystem::create_directories(export_dir);
          write_atomic(std::filesystem::path(export_dir) / (name + ".json"), config.dump(2) + "\n");
        }
      }
      return 0;
    }
    const Json resolved = load(config_path, sets);
    if (*validate_cmd) {
      std::cout << "ok " << resolved["kind"].get<std::string>() << ' ' << config_hash(resolved) << '\n';
      return 0;
    }
    if (jobs > 0) omp_set_num_threads(jobs);
    const auto report = run(resolved);
    for (const auto& a : report.artifacts) {
      std::cout << (std::filesystem::path(resolved["output_dir"].get<std::string>()) / a).string() << '\n';
    }
    std::cerr << "done in " << report.wall_time << " s\n";
    return 0;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}
