#include "polyfp/run_config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "polyfp/gaussian.hpp"

namespace polyfp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& require(const json& node, const char* key, const std::string& where) {
  if (!node.contains(key)) fail(where, std::string("missing field '") + key + "'");
  return node.at(key);
}

double require_number(const json& node, const char* key, const std::string& where) {
  const json& v = require(node, key, where);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

int require_int(const json& node, const char* key, const std::string& where) {
  const json& v = require(node, key, where);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

std::string require_string(const json& node, const char* key, const std::string& where) {
  const json& v = require(node, key, where);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("top-level config must be an object");

  RunConfig config;

  const json& chain = require(root, "chain", "config");
  config.chain.n_springs = require_int(chain, "n_springs", "chain");
  config.chain.space_dim = require_int(chain, "space_dim", "chain");
  if (config.chain.n_springs < 1) fail("chain.n_springs", "must be >= 1");
  if (config.chain.space_dim < 1) fail("chain.space_dim", "must be >= 1");

  const json& params = require(root, "params", "config");
  config.params.deborah = require_number(params, "deborah", "params");
  config.params.center_diffusion = params.contains("center_diffusion")
                                       ? require_number(params, "center_diffusion", "params")
                                       : 0.0;
  if (!(config.params.deborah > 0.0)) fail("params.deborah", "must be > 0");
  if (!(config.params.center_diffusion >= 0.0)) fail("params.center_diffusion", "must be >= 0");

  const json& flow = require(root, "flow", "config");
  config.flow.kind = require_string(flow, "kind", "flow");
  if (config.flow.kind != "zero" && config.flow.kind != "simple_shear" &&
      config.flow.kind != "planar_extension")
    fail("flow.kind", "must be one of zero|simple_shear|planar_extension");
  if (config.flow.kind != "zero") {
    config.flow.rate = require_number(flow, "rate", "flow");
    if (config.flow.kind == "simple_shear" && config.chain.space_dim < 2)
      fail("flow", "simple_shear needs space_dim >= 2");
    if (config.flow.kind == "planar_extension" && config.chain.space_dim != 2)
      fail("flow", "planar_extension needs space_dim == 2");
  }

  if (root.contains("initial")) {
    const json& initial = root.at("initial");
    config.initial.kind = require_string(initial, "kind", "initial");
    if (config.initial.kind == "blocks") {
      const json& blocks = require(initial, "blocks", "initial");
      if (!blocks.is_array() || blocks.size() != static_cast<std::size_t>(config.chain.n_springs))
        fail("initial.blocks", "need one row-major block per spring");
      const int d = config.chain.space_dim;
      for (const auto& entry : blocks) {
        if (!entry.is_array() || entry.size() != static_cast<std::size_t>(d) * d)
          fail("initial.blocks", "each block must hold d*d numbers, row-major");
        Eigen::MatrixXd block(d, d);
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) block(i, j) = entry.at(i * d + j).get<double>();
        config.initial.blocks.push_back(block);
      }
    } else if (config.initial.kind == "perturbed") {
      config.initial.amplitude = require_number(initial, "amplitude", "initial");
      if (!(std::abs(config.initial.amplitude) < 0.7))
        fail("initial.amplitude", "must have |amplitude| < 0.7 to keep the field SPD");
    } else if (config.initial.kind != "identity" && config.initial.kind != "stationary") {
      fail("initial.kind", "must be one of identity|blocks|stationary|perturbed");
    }
  }

  const json& integrator = require(root, "integrator", "config");
  config.integrator.dt = require_number(integrator, "dt", "integrator");
  config.integrator.t_end = require_number(integrator, "t_end", "integrator");
  config.integrator.output_stride = integrator.contains("output_stride")
                                        ? require_int(integrator, "output_stride", "integrator")
                                        : 1;
  if (!(config.integrator.dt > 0.0)) fail("integrator.dt", "must be > 0");
  if (!(config.integrator.t_end > 0.0)) fail("integrator.t_end", "must be > 0");
  if (config.integrator.output_stride < 1) fail("integrator.output_stride", "must be >= 1");

  if (root.contains("oracle")) {
    const json& oracle = root.at("oracle");
    config.oracle.kind = require_string(oracle, "kind", "oracle");
    if (config.oracle.kind == "ensemble") {
      config.oracle.particles = require_int(oracle, "particles", "oracle");
      if (config.oracle.particles < 2) fail("oracle.particles", "must be >= 2");
      config.oracle.seed = static_cast<std::uint64_t>(require_number(oracle, "seed", "oracle"));
    } else if (config.oracle.kind == "grid") {
      config.oracle.half_width = require_number(oracle, "half_width", "oracle");
      config.oracle.cells = require_int(oracle, "cells", "oracle");
      if (!(config.oracle.half_width > 0.0)) fail("oracle.half_width", "must be > 0");
      if (config.oracle.cells < 4) fail("oracle.cells", "must be >= 4");
      if (config.chain.config_dim() > 2)
        fail("oracle", "grid oracle supports configuration dimension <= 2 only");
    } else if (config.oracle.kind != "none") {
      fail("oracle.kind", "must be one of none|ensemble|grid");
    }
  }

  if (root.contains("spatial")) {
    const json& spatial = root.at("spatial");
    SpatialConfig sc;
    sc.dim = require_int(spatial, "dim", "spatial");
    if (sc.dim < 1 || sc.dim > 2) fail("spatial.dim", "must be 1 or 2");
    if (sc.dim != config.chain.space_dim)
      fail("spatial.dim", "must equal chain.space_dim");
    const json& cells = require(spatial, "cells", "spatial");
    if (!cells.is_array() || cells.size() != static_cast<std::size_t>(sc.dim))
      fail("spatial.cells", "need one entry per axis");
    sc.cells = {cells.at(0).get<int>(), sc.dim > 1 ? cells.at(1).get<int>() : 1};
    if (sc.cells[0] < 4 || (sc.dim > 1 && sc.cells[1] < 4))
      fail("spatial.cells", "need at least 4 cells per axis");
    sc.spacing = require_number(spatial, "spacing", "spatial");
    if (!(sc.spacing > 0.0)) fail("spatial.spacing", "must be > 0");
    if (spatial.contains("origin")) {
      const json& origin = spatial.at("origin");
      if (!origin.is_array() || origin.size() != static_cast<std::size_t>(sc.dim))
        fail("spatial.origin", "need one entry per axis");
      sc.origin = {origin.at(0).get<double>(),
                   sc.dim > 1 ? origin.at(1).get<double>() : 0.0};
    }
    config.spatial = sc;
    if (config.oracle.kind != "none")
      fail("oracle", "ensemble and grid oracles require a homogeneous run");
  }

  if (root.contains("emit_residual")) {
    if (!root.at("emit_residual").is_boolean()) fail("emit_residual", "expected a boolean");
    config.emit_residual = root.at("emit_residual").get<bool>();
  }

  config.output_prefix = require_string(root, "output_prefix", "config");
  if (config.output_prefix.empty()) fail("output_prefix", "must not be empty");

  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

FlowSpec make_flow(const RunConfig& config) {
  if (config.flow.kind == "simple_shear")
    return FlowSpec::simple_shear(config.flow.rate, config.chain.space_dim);
  if (config.flow.kind == "planar_extension") return FlowSpec::planar_extension(config.flow.rate);
  return FlowSpec::zero(config.chain.space_dim);
}

BlockCovariance make_initial_covariance(const RunConfig& config, const NormalModes& modes) {
  const int N = config.chain.n_springs;
  const int d = config.chain.space_dim;
  if (config.initial.kind == "blocks") {
    BlockCovariance cov{config.initial.blocks};
    check_covariance(cov);
    return cov;
  }
  if (config.initial.kind == "stationary") {
    const FlowSpec flow = make_flow(config);
    const Eigen::MatrixXd grad = flow.gradient(0.0, Eigen::VectorXd::Zero(d));
    return stationary_state(grad, modes, config.params.deborah);
  }
  return BlockCovariance::Identity(N, d);
}

SpatialGrid make_grid(const SpatialConfig& config) {
  SpatialGrid grid;
  grid.dim = config.dim;
  grid.cells = config.cells;
  grid.spacing = config.spacing;
  grid.origin = config.origin;
  check_grid(grid);
  return grid;
}

SpatialState make_initial_field(const RunConfig& config, const NormalModes& modes,
                                const SpatialGrid& grid) {
  if (config.initial.kind != "perturbed")
    return SpatialState::uniform(grid, make_initial_covariance(config, modes));

  const int N = config.chain.n_springs;
  const int d = config.chain.space_dim;
  const double a = config.initial.amplitude;
  const double span_x = grid.cells[0] * grid.spacing;

  SpatialState state;
  state.cells.reserve(grid.cell_count());
  for (int j = 0; j < (grid.dim > 1 ? grid.cells[1] : 1); ++j) {
    for (int i = 0; i < grid.cells[0]; ++i) {
      const Eigen::VectorXd x = grid.center(i, j);
      const double phase = 2.0 * std::numbers::pi * (x[0] - grid.origin[0]) / span_x;
      Eigen::MatrixXd bump = Eigen::MatrixXd::Zero(d, d);
      for (int k = 0; k < d; ++k) bump(k, k) = (k % 2 == 0 ? 1.0 : -1.0);
      if (d >= 2) {
        bump(0, 1) += 0.25;
        bump(1, 0) += 0.25;
      }
      Eigen::MatrixXd block =
          Eigen::MatrixXd::Identity(d, d) + a * std::sin(phase) * bump;
      state.cells.emplace_back(std::vector<Eigen::MatrixXd>(N, block));
    }
  }
  return state;
}

}  // namespace polyfp
