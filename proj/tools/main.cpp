#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyfp/run_config.hpp"
#include "polyfp/runner.hpp"
#include "polyfp/verify.hpp"

namespace {

// exit codes: 0 ok, 2 config violation, 3 integration failure,
// 4 oracle failure, 5 verification suite failed
constexpr int kExitConfig = 2;
constexpr int kExitIntegration = 3;
constexpr int kExitOracle = 4;
constexpr int kExitVerifyFail = 5;

void print_error(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  std::cout << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian closure toolkit for Hookean bead-spring chains"};
  app.set_version_flag("--version", "polyfp 0.1.0");
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir = ".";
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  std::string suite_name;

  CLI::App* run_cmd = app.add_subcommand("run", "integrate a configured scenario");
  run_cmd->add_option("config", config_path, "JSON config file")->required();
  run_cmd->add_option("--output-dir", output_dir, "directory for output files");
  run_cmd->add_option("--seed", seed_override, "override the oracle seed")
      ->each([&](const std::string&) { has_seed_override = true; });

  CLI::App* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  verify_cmd->add_option("suite", suite_name, "orthogonality|tangency|equivalence|exactness|spd|residual")
      ->required();
  verify_cmd->add_option("--output-dir", output_dir, "directory for the JSON report");

  CLI::App* steady_cmd = app.add_subcommand("steady", "print the steady covariance of a flow");
  steady_cmd->add_option("config", config_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run_cmd->parsed()) {
      polyfp::RunConfig config = polyfp::load_run_config(config_path);
      if (has_seed_override) config.oracle.seed = seed_override;
      const polyfp::RunResult result = polyfp::run_scenario(config, output_dir);
      std::cout << "wrote " << result.traj_path << " and " << result.meta_path << std::endl;
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << std::endl;
      return 0;
    }
    if (verify_cmd->parsed()) {
      const polyfp::SuiteReport report = polyfp::verify_suite(suite_name);
      const std::filesystem::path dir(output_dir);
      std::filesystem::create_directories(dir);
      const std::string path = (dir / ("verify_" + report.suite + ".json")).string();
      std::ofstream out(path);
      out << polyfp::to_json(report) << '\n';
      for (const auto& c : report.criteria) {
        std::printf("[%s] %s: observed %.6g (threshold %s %.6g)\n", c.pass ? "PASS" : "FAIL",
                    c.name.c_str(), c.observed, c.larger_is_better ? ">" : "<=", c.threshold);
      }
      std::cout << (report.pass ? "suite passed" : "suite FAILED") << ", report: " << path
                << std::endl;
      return report.pass ? 0 : kExitVerifyFail;
    }
    if (steady_cmd->parsed()) {
      const polyfp::RunConfig config = polyfp::load_run_config(config_path);
      std::cout << polyfp::steady_report(config) << std::endl;
      return 0;
    }
  } catch (const polyfp::ConfigError& e) {
    print_error("config", e.what());
    return kExitConfig;
  } catch (const polyfp::OracleError& e) {
    print_error("oracle", e.what());
    return kExitOracle;
  } catch (const std::invalid_argument& e) {
    print_error("config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error("integration", e.what());
    return kExitIntegration;
  }
  return 0;
}
