#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyfp/chain.hpp"
#include "polyfp/dynamics.hpp"

namespace polyfp {

/// Configuration file violated the schema.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Oracle computation failed or rejected its inputs.
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowConfig {
  std::string kind = "zero";  // zero | simple_shear | planar_extension
  double rate = 0.0;
};

struct InitialConfig {
  std::string kind = "identity";  // identity | blocks | stationary | perturbed
  std::vector<Eigen::MatrixXd> blocks;  // for kind == blocks
  double amplitude = 0.0;               // for kind == perturbed (spatial runs)
};

struct IntegratorConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  int output_stride = 1;
};

struct OracleConfig {
  std::string kind = "none";  // none | ensemble | grid
  int particles = 0;
  std::uint64_t seed = 0;
  double half_width = 0.0;
  int cells = 0;
};

struct SpatialConfig {
  int dim = 1;
  std::array<int, 2> cells = {4, 1};
  double spacing = 1.0;
  std::array<double, 2> origin = {0.0, 0.0};
};

struct RunConfig {
  ChainSpec chain;
  ModelParams params;
  FlowConfig flow;
  InitialConfig initial;
  IntegratorConfig integrator;
  OracleConfig oracle;
  std::optional<SpatialConfig> spatial;
  bool emit_residual = false;
  std::string output_prefix = "run";
};

/// Parse and schema-validate a config file. Throws ConfigError with a
/// field-qualified message on any violation; no computation is started
/// before validation passes.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

/// Instantiate the configured velocity field.
FlowSpec make_flow(const RunConfig& config);

/// Instantiate the configured initial covariance (homogeneous kinds).
BlockCovariance make_initial_covariance(const RunConfig& config, const NormalModes& modes);

/// Initial field for spatial runs; kind "perturbed" varies smoothly in x.
SpatialState make_initial_field(const RunConfig& config, const NormalModes& modes,
                                const SpatialGrid& grid);

SpatialGrid make_grid(const SpatialConfig& config);

}  // namespace polyfp
