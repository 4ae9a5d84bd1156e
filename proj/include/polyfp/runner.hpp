#pragma once

#include <string>
#include <vector>

#include "polyfp/run_config.hpp"

namespace polyfp {

struct RunResult {
  std::string traj_path;
  std::string meta_path;
  std::vector<std::string> warnings;
};

/// Execute a validated config: integrate, run the requested oracle, and
/// write <prefix>_traj.csv and <prefix>_meta.json under output_dir.
/// The CSV body is byte-identical across reruns of the same config and
/// seed; the timestamp lives only in the metadata file.
RunResult run_scenario(const RunConfig& config, const std::string& output_dir);

/// Lyapunov steady state of the configured flow, as a JSON report string.
std::string steady_report(const RunConfig& config);

}  // namespace polyfp
