#include "polyfp/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "polyfp/gaussian.hpp"
#include "polyfp/quadrature.hpp"
#include "polyfp/reference.hpp"
#include "polyfp/variational.hpp"

namespace polyfp {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> columns)
      : out_(path), columns_(std::move(columns)) {
    if (!out_) throw std::runtime_error("cannot open output file: " + path);
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns_[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_.size())
      throw std::runtime_error("CSV row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]))
        throw std::runtime_error("refusing to write non-finite value to column " + columns_[i]);
      if (i) out_ << ',';
      out_ << format_value(values[i]);
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
};

void append_block_columns(std::vector<std::string>& cols, const std::string& prefix, int N,
                          int d) {
  for (int n = 1; n <= N; ++n)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        cols.push_back(prefix + std::to_string(n) + "_" + std::to_string(i) + std::to_string(j));
}

void append_matrix_columns(std::vector<std::string>& cols, const std::string& prefix, int d) {
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      cols.push_back(prefix + "_" + std::to_string(i) + std::to_string(j));
}

void append_blocks(std::vector<double>& row, const BlockCovariance& cov) {
  const int d = cov.block_dim();
  for (int n = 0; n < cov.n_blocks(); ++n)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) row.push_back(cov.block(n)(i, j));
}

void append_matrix(std::vector<double>& row, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
}

double min_eigenvalue(const BlockCovariance& cov) {
  double lo = std::numeric_limits<double>::infinity();
  for (int n = 0; n < cov.n_blocks(); ++n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.block(n), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

BlockCovariance spatial_mean(const SpatialState& state) {
  BlockCovariance mean = BlockDiag::Zero(state.cells.front().n_blocks(),
                                         state.cells.front().block_dim());
  for (const auto& cell : state.cells) mean += cell;
  mean *= 1.0 / static_cast<double>(state.cells.size());
  return mean;
}

/// Ω-integrated residual indicator ‖(I-P_f) L f‖ of a spatial state:
/// sqrt(Σ_cells h^dim · ε² ∫ ρ² f dq) with covariance derivatives by
/// centered differences and mirror ghosts.
double spatial_residual_indicator(const SpatialState& state, const SpatialGrid& grid,
                                  const FlowSpec& flow, const ModelParams& params, double t) {
  const double eps = params.center_diffusion;
  if (eps == 0.0) return 0.0;
  const int mx = grid.cells[0];
  const int my = grid.dim > 1 ? grid.cells[1] : 1;
  const double h = grid.spacing;
  const int N = state.cells.front().n_blocks();
  const int d = state.cells.front().block_dim();
  const TensorRule rule = tensor_rule(N * d, 6);

  double cell_volume = 1.0;
  for (int a = 0; a < grid.dim; ++a) cell_volume *= h;

  double total = 0.0;
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < mx; ++i) {
      const int c = grid.index(i, j);
      const auto mirror = [](int k, int m) { return std::clamp(k, 0, m - 1); };
      const auto& cm = state.cells;
      const BlockCovariance& center = cm[c];

      SpatialDerivatives deriv;
      const BlockCovariance& xl = cm[grid.index(mirror(i - 1, mx), j)];
      const BlockCovariance& xr = cm[grid.index(mirror(i + 1, mx), j)];
      deriv.grad.push_back((0.5 / h) * (xr - xl));
      BlockDiag laplacian = (1.0 / (h * h)) * (xr - 2.0 * center + xl);
      if (grid.dim > 1) {
        const BlockCovariance& yl = cm[grid.index(i, mirror(j - 1, my))];
        const BlockCovariance& yr = cm[grid.index(i, mirror(j + 1, my))];
        deriv.grad.push_back((0.5 / h) * (yr - yl));
        laplacian += (1.0 / (h * h)) * (yr - 2.0 * center + yl);
      }
      if (grid.dim < d) {
        // field constant along unmodeled spatial axes
        for (int a = grid.dim; a < d; ++a) deriv.grad.push_back(BlockDiag::Zero(N, d));
      }

      const Eigen::VectorXd u = flow.velocity(t, grid.center(i, j));
      BlockDiag advected = BlockDiag::Zero(N, d);
      for (int a = 0; a < grid.dim; ++a) advected += u[a] * deriv.grad[a];
      advected -= eps * laplacian;
      deriv.advected = advected;

      const RemainderEvaluator rho(deriv, center);
      double rho_sq = 0.0;
      for_each_gaussian_node(center, rule, [&](const Eigen::VectorXd& q, double w) {
        const double r = rho(q);
        rho_sq += w * r * r;
      });
      total += cell_volume * eps * eps * rho_sq;
    }
  }
  return std::sqrt(total);
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json config_echo(const RunConfig& config) {
  json echo;
  echo["chain"] = {{"n_springs", config.chain.n_springs}, {"space_dim", config.chain.space_dim}};
  echo["params"] = {{"deborah", config.params.deborah},
                    {"center_diffusion", config.params.center_diffusion}};
  echo["flow"] = {{"kind", config.flow.kind}, {"rate", config.flow.rate}};
  echo["initial"] = {{"kind", config.initial.kind}, {"amplitude", config.initial.amplitude}};
  echo["integrator"] = {{"dt", config.integrator.dt},
                        {"t_end", config.integrator.t_end},
                        {"output_stride", config.integrator.output_stride}};
  echo["oracle"] = {{"kind", config.oracle.kind},
                    {"particles", config.oracle.particles},
                    {"seed", config.oracle.seed},
                    {"half_width", config.oracle.half_width},
                    {"cells", config.oracle.cells}};
  if (config.spatial) {
    echo["spatial"] = {{"dim", config.spatial->dim},
                       {"cells", {config.spatial->cells[0], config.spatial->cells[1]}},
                       {"spacing", config.spatial->spacing},
                       {"origin", {config.spatial->origin[0], config.spatial->origin[1]}}};
  }
  echo["emit_residual"] = config.emit_residual;
  echo["output_prefix"] = config.output_prefix;
  return echo;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

RunResult run_scenario(const RunConfig& config, const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::path dir = output_dir.empty() ? fs::path(".") : fs::path(output_dir);
  fs::create_directories(dir);
  const std::string traj_path = (dir / (config.output_prefix + "_traj.csv")).string();
  const std::string meta_path = (dir / (config.output_prefix + "_meta.json")).string();

  const NormalModes modes = rouse_modes(config.chain);
  const FlowSpec flow = make_flow(config);
  const int N = config.chain.n_springs;
  const int d = config.chain.space_dim;

  std::vector<std::string> columns{"t"};
  append_block_columns(columns, "C", N, d);
  append_matrix_columns(columns, "conf", d);
  append_matrix_columns(columns, "tau", d);
  columns.push_back("min_eig");
  if (config.emit_residual) columns.push_back("residual");
  if (config.oracle.kind == "ensemble") {
    append_block_columns(columns, "oC", N, d);
    append_block_columns(columns, "se_C", N, d);
  } else if (config.oracle.kind == "grid") {
    columns.push_back("oracle_l1_gap");
    columns.push_back("oracle_mass");
  }

  RunResult result;
  result.traj_path = traj_path;
  result.meta_path = meta_path;

  json meta;
  meta["version"] = kVersion;
  meta["config"] = config_echo(config);
  meta["columns"] = columns;
  meta["created"] = timestamp_utc();

  CsvWriter csv(traj_path, columns);

  const auto emit_state = [&](double t, const BlockCovariance& cov, double residual,
                              const std::vector<double>& oracle_values) {
    std::vector<double> row{t};
    append_blocks(row, cov);
    append_matrix(row, conformation(cov));
    append_matrix(row, extra_stress(cov));
    row.push_back(min_eigenvalue(cov));
    if (config.emit_residual) row.push_back(residual);
    for (double v : oracle_values) row.push_back(v);
    csv.row(row);
  };

  if (config.spatial) {
    const SpatialGrid grid = make_grid(*config.spatial);
    const SpatialState initial = make_initial_field(config, modes, grid);
    const SpatialTrajectory traj =
        integrate_spatial(initial, flow, modes, config.params, grid, 0.0,
                          config.integrator.t_end, config.integrator.dt,
                          config.integrator.output_stride);
    meta["spatial_reduction"] = "rows carry the cell mean of each block";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      double min_eig = std::numeric_limits<double>::infinity();
      for (const auto& cell : traj.states[k].cells) min_eig = std::min(min_eig, min_eigenvalue(cell));
      const double residual =
          config.emit_residual
              ? spatial_residual_indicator(traj.states[k], grid, flow, config.params,
                                           traj.times[k])
              : 0.0;
      // rows carry the spatially averaged state; min_eig is over all cells
      std::vector<double> row{traj.times[k]};
      const BlockCovariance mean = spatial_mean(traj.states[k]);
      append_blocks(row, mean);
      append_matrix(row, conformation(mean));
      append_matrix(row, extra_stress(mean));
      row.push_back(min_eig);
      if (config.emit_residual) row.push_back(residual);
      csv.row(row);
    }
  } else {
    const BlockCovariance initial = make_initial_covariance(config, modes);
    const Trajectory traj =
        integrate_homogeneous(initial, flow, modes, config.params, 0.0,
                              config.integrator.t_end, config.integrator.dt,
                              config.integrator.output_stride);

    if (config.oracle.kind == "ensemble") {
      try {
        Ensemble ens = sample_gaussian_ensemble(config.oracle.particles, initial,
                                                config.oracle.seed);
        const Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
        std::size_t cursor = 0;
        const long n_steps =
            std::lround(config.integrator.t_end / config.integrator.dt);
        const auto moments_row = [&](std::vector<double>& out) {
          const MomentEstimate est = empirical_moments(ens);
          for (int n = 0; n < N; ++n) append_matrix(out, est.block(n, d));
          for (int n = 0; n < N; ++n) append_matrix(out, est.block_se(n, d));
        };
        // emit rows in lockstep with the recorded trajectory times
        std::vector<double> oracle_values;
        if (cursor < traj.times.size() && traj.times[cursor] == 0.0) {
          oracle_values.clear();
          moments_row(oracle_values);
          emit_state(0.0, traj.states[cursor], 0.0, oracle_values);
          ++cursor;
        }
        for (long k = 0; k < n_steps; ++k) {
          const double t = k * config.integrator.dt;
          sde_step(ens, deformation_blocks(flow, t, x, modes, config.params), modes,
                   config.params.deborah, config.integrator.dt);
          const double t_next = (k + 1) * config.integrator.dt;
          if (cursor < traj.times.size() &&
              std::abs(traj.times[cursor] - t_next) < 0.5 * config.integrator.dt) {
            oracle_values.clear();
            moments_row(oracle_values);
            emit_state(traj.times[cursor], traj.states[cursor], 0.0, oracle_values);
            ++cursor;
          }
        }
        meta["oracle_seed"] = config.oracle.seed;
      } catch (const std::invalid_argument& e) {
        throw OracleError(e.what());
      } catch (const std::domain_error& e) {
        throw OracleError(e.what());
      }
    } else if (config.oracle.kind == "grid") {
      try {
        GridDensity grid_density =
            gaussian_grid(config.oracle.half_width, config.oracle.cells, initial);
        const Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
        double clipped = 0.0;
        double final_boundary = 0.0;
        std::vector<std::string> grid_warnings;
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
          if (k > 0) {
            const auto M_blocks =
                deformation_blocks(flow, traj.times[k - 1], x, modes, config.params);
            const GridEvolveReport report =
                grid_evolve(grid_density, M_blocks, modes, config.params.deborah,
                            traj.times[k - 1], traj.times[k], config.integrator.dt);
            clipped += report.clipped_mass;
            final_boundary = report.boundary_mass;
            for (const auto& w : report.warnings) grid_warnings.push_back(w);
          }
          std::vector<double> oracle_values{density_l1_gap(grid_density, traj.states[k]),
                                            grid_density.mass()};
          emit_state(traj.times[k], traj.states[k], 0.0, oracle_values);
        }
        meta["grid_clipped_mass"] = clipped;
        meta["grid_boundary_mass"] = final_boundary;
        for (const auto& w : grid_warnings) result.warnings.push_back(w);
      } catch (const std::invalid_argument& e) {
        throw OracleError(e.what());
      } catch (const std::domain_error& e) {
        throw OracleError(e.what());
      }
    } else {
      for (std::size_t k = 0; k < traj.times.size(); ++k)
        emit_state(traj.times[k], traj.states[k], 0.0, {});
    }
  }

  meta["warnings"] = result.warnings;
  std::ofstream meta_out(meta_path);
  if (!meta_out) throw std::runtime_error("cannot open output file: " + meta_path);
  meta_out << meta.dump(2) << '\n';
  return result;
}

std::string steady_report(const RunConfig& config) {
  const NormalModes modes = rouse_modes(config.chain);
  const FlowSpec flow = make_flow(config);
  const int d = config.chain.space_dim;
  const auto M_blocks = deformation_blocks(flow, 0.0, Eigen::VectorXd::Zero(d), modes,
                                           config.params);

  std::vector<Eigen::MatrixXd> blocks;
  for (std::size_t n = 0; n < M_blocks.size(); ++n)
    blocks.push_back(lyapunov_steady(M_blocks[n], modes.eigenvalues[static_cast<int>(n)],
                                     config.params.deborah));
  BlockCovariance cov{blocks};

  json report;
  report["blocks"] = json::array();
  for (const auto& b : blocks) report["blocks"].push_back(matrix_to_json(b));
  report["conformation"] = matrix_to_json(conformation(cov));
  report["extra_stress"] = matrix_to_json(extra_stress(cov));
  return report.dump(2);
}

}  // namespace polyfp
