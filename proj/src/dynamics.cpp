#include "polyfp/dynamics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace polyfp {

void check_params(const ModelParams& params) {
  if (!(params.deborah > 0.0)) throw std::invalid_argument("Deborah number must be positive");
  if (!(params.center_diffusion >= 0.0))
    throw std::invalid_argument("center diffusion must be nonnegative");
}

FlowSpec FlowSpec::zero(int space_dim) {
  return custom([space_dim](double, const Eigen::VectorXd&) {
                  return Eigen::VectorXd::Zero(space_dim).eval();
                },
                [space_dim](double, const Eigen::VectorXd&) {
                  return Eigen::MatrixXd::Zero(space_dim, space_dim).eval();
                });
}

FlowSpec FlowSpec::simple_shear(double rate, int space_dim) {
  if (space_dim < 2) throw std::invalid_argument("simple shear needs at least two dimensions");
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(space_dim, space_dim);
  grad(0, 1) = rate;
  return custom([grad](double, const Eigen::VectorXd& x) { return (grad * x).eval(); },
                [grad](double, const Eigen::VectorXd&) { return grad; });
}

FlowSpec FlowSpec::planar_extension(double rate) {
  Eigen::MatrixXd grad(2, 2);
  grad << rate, 0.0, 0.0, -rate;
  return custom([grad](double, const Eigen::VectorXd& x) { return (grad * x).eval(); },
                [grad](double, const Eigen::VectorXd&) { return grad; });
}

FlowSpec FlowSpec::custom(VelocityFn velocity, GradientFn gradient) {
  FlowSpec flow;
  flow.velocity = std::move(velocity);
  flow.gradient = std::move(gradient);
  return flow;
}

std::vector<Eigen::MatrixXd> deformation_blocks(const FlowSpec& flow, double t,
                                                const Eigen::VectorXd& x, const NormalModes& modes,
                                                const ModelParams& params) {
  check_params(params);
  const Eigen::MatrixXd grad = flow.gradient(t, x);
  const int d = static_cast<int>(grad.rows());
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(modes.eigenvalues.size());
  for (Eigen::Index n = 0; n < modes.eigenvalues.size(); ++n)
    blocks.push_back((modes.eigenvalues[n] / (2.0 * params.deborah)) *
                         Eigen::MatrixXd::Identity(d, d) -
                     grad);
  return blocks;
}

Eigen::MatrixXd rhs_block(const Eigen::MatrixXd& C_n, const Eigen::MatrixXd& M_n, double lambda_n,
                          const ModelParams& params) {
  const Eigen::MatrixXd MC = M_n * C_n;
  return (lambda_n / params.deborah) *
             Eigen::MatrixXd::Identity(C_n.rows(), C_n.cols()) -
         MC - MC.transpose();
}

namespace {

BlockDiag reaction_rhs(const BlockCovariance& state, const std::vector<Eigen::MatrixXd>& M_blocks,
                       const NormalModes& modes, const ModelParams& params) {
  BlockDiag out = state;
  for (int n = 0; n < state.n_blocks(); ++n)
    out.block(n) = rhs_block(state.block(n), M_blocks[n], modes.eigenvalues[n], params);
  return out;
}

BlockDiag rk4_step(const BlockCovariance& state, const FlowSpec& flow, const NormalModes& modes,
                   const ModelParams& params, const Eigen::VectorXd& x, double t, double dt) {
  const auto rhs = [&](double s, const BlockDiag& y) {
    return reaction_rhs(y, deformation_blocks(flow, s, x, modes, params), modes, params);
  };
  const BlockDiag k1 = rhs(t, state);
  const BlockDiag k2 = rhs(t + 0.5 * dt, state + 0.5 * dt * k1);
  const BlockDiag k3 = rhs(t + 0.5 * dt, state + 0.5 * dt * k2);
  const BlockDiag k4 = rhs(t + dt, state + dt * k3);
  BlockDiag next = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  next.symmetrize();
  return next;
}

/// Advance one nominal step, retrying on halved substeps when SPD is lost.
BlockDiag advance_spd(const BlockCovariance& state, const FlowSpec& flow,
                      const NormalModes& modes, const ModelParams& params,
                      const Eigen::VectorXd& x, double t, double dt, int depth) {
  BlockDiag next = rk4_step(state, flow, modes, params, x, t, dt);
  if (is_valid_covariance(next)) return next;
  if (depth >= 10) {
    std::ostringstream msg;
    msg << "integration lost positive definiteness at t = " << t
        << " (substep " << dt << ")";
    throw std::runtime_error(msg.str());
  }
  const BlockDiag half = advance_spd(state, flow, modes, params, x, t, 0.5 * dt, depth + 1);
  return advance_spd(half, flow, modes, params, x, t + 0.5 * dt, 0.5 * dt, depth + 1);
}

}  // namespace

Trajectory integrate_homogeneous(const BlockCovariance& initial, const FlowSpec& flow,
                                 const NormalModes& modes, const ModelParams& params,
                                 double t_begin, double t_end, double dt, int output_stride) {
  check_params(params);
  check_covariance(initial);
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_homogeneous: dt must be positive");
  if (output_stride < 1) throw std::invalid_argument("integrate_homogeneous: bad output stride");

  const Eigen::VectorXd x = Eigen::VectorXd::Zero(initial.block_dim());
  const long n_steps = std::lround((t_end - t_begin) / dt);

  Trajectory traj;
  traj.times.push_back(t_begin);
  traj.states.push_back(initial);

  BlockCovariance state = initial;
  for (long k = 0; k < n_steps; ++k) {
    const double t = t_begin + k * dt;
    state = advance_spd(state, flow, modes, params, x, t, dt, 0);
    if ((k + 1) % output_stride == 0 || k + 1 == n_steps) {
      traj.times.push_back(t_begin + (k + 1) * dt);
      traj.states.push_back(state);
    }
  }
  return traj;
}

Eigen::MatrixXd lyapunov_steady(const Eigen::MatrixXd& M, double lambda, double De) {
  if (M.rows() != M.cols()) throw std::invalid_argument("lyapunov_steady: M must be square");
  if (!(De > 0.0)) throw std::invalid_argument("lyapunov_steady: De must be positive");
  const int d = static_cast<int>(M.rows());

  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  if (!(es.eigenvalues().real().minCoeff() > 0.0))
    throw std::domain_error("lyapunov_steady: M is not stable, no bounded steady state");

  // symmetric basis: E_ii, E_ij + E_ji ordered by (i ≤ j)
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) pairs.emplace_back(i, j);
  const int K = static_cast<int>(pairs.size());

  const auto sym_vec = [&](const Eigen::MatrixXd& S) {
    Eigen::VectorXd v(K);
    for (int k = 0; k < K; ++k) v[k] = S(pairs[k].first, pairs[k].second);
    return v;
  };

  Eigen::MatrixXd system(K, K);
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(d, d);
    unit(pairs[k].first, pairs[k].second) = 1.0;
    unit(pairs[k].second, pairs[k].first) = 1.0;
    system.col(k) = sym_vec(M * unit + unit * M.transpose());
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw std::domain_error("lyapunov_steady: singular system");
  const Eigen::VectorXd rhs = sym_vec((lambda / De) * Eigen::MatrixXd::Identity(d, d));
  const Eigen::VectorXd sol = lu.solve(rhs);

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < K; ++k) {
    C(pairs[k].first, pairs[k].second) = sol[k];
    C(pairs[k].second, pairs[k].first) = sol[k];
  }

  const double residual =
      (M * C + C * M.transpose() -
       (lambda / De) * Eigen::MatrixXd::Identity(d, d))
          .cwiseAbs()
          .maxCoeff();
  const double scale = std::max(1.0, C.cwiseAbs().maxCoeff() * M.cwiseAbs().maxCoeff());
  if (residual > 1e-11 * scale) throw std::runtime_error("lyapunov_steady: residual too large");
  return C;
}

Eigen::VectorXd SpatialGrid::center(int i, int j) const {
  Eigen::VectorXd x(dim);
  x[0] = origin[0] + (i + 0.5) * spacing;
  if (dim > 1) x[1] = origin[1] + (j + 0.5) * spacing;
  return x;
}

void check_grid(const SpatialGrid& grid) {
  if (grid.dim < 1 || grid.dim > 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  if (!(grid.spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  if (grid.cells[0] < 4 || (grid.dim > 1 && grid.cells[1] < 4))
    throw std::invalid_argument("grid needs at least 4 cells per axis");
  if (grid.dim == 1 && grid.cells[1] != 1)
    throw std::invalid_argument("one-dimensional grid must have cells[1] == 1");
}

SpatialState SpatialState::uniform(const SpatialGrid& grid, const BlockCovariance& value) {
  SpatialState state;
  state.cells.assign(grid.cell_count(), value);
  return state;
}

namespace {

struct NeighborIndex {
  // mirror reflection at the walls
  static int lo(int i) { return i > 0 ? i - 1 : 0; }
  static int hi(int i, int m) { return i + 1 < m ? i + 1 : m - 1; }
};

std::vector<BlockDiag> spatial_rhs(const std::vector<BlockCovariance>& cells,
                                   const FlowSpec& flow, const NormalModes& modes,
                                   const ModelParams& params, const SpatialGrid& grid, double t) {
  const int mx = grid.cells[0];
  const int my = grid.dim > 1 ? grid.cells[1] : 1;
  const double h = grid.spacing;
  const double eps = params.center_diffusion;

  std::vector<BlockDiag> out(cells.size());
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < mx; ++i) {
      const int c = grid.index(i, j);
      const Eigen::VectorXd x = grid.center(i, j);
      const Eigen::VectorXd u = flow.velocity(t, x);
      const auto M_blocks = deformation_blocks(flow, t, x, modes, params);

      BlockDiag rhs = reaction_rhs(cells[c], M_blocks, modes, params);

      const int xl = grid.index(NeighborIndex::lo(i), j);
      const int xr = grid.index(NeighborIndex::hi(i, mx), j);
      if (u[0] > 0.0)
        rhs -= (u[0] / h) * (cells[c] - cells[xl]);
      else if (u[0] < 0.0)
        rhs -= (u[0] / h) * (cells[xr] - cells[c]);
      if (eps > 0.0) rhs += (eps / (h * h)) * (cells[xr] - 2.0 * cells[c] + cells[xl]);

      if (grid.dim > 1) {
        const int yl = grid.index(i, NeighborIndex::lo(j));
        const int yr = grid.index(i, NeighborIndex::hi(j, my));
        if (u[1] > 0.0)
          rhs -= (u[1] / h) * (cells[c] - cells[yl]);
        else if (u[1] < 0.0)
          rhs -= (u[1] / h) * (cells[yr] - cells[c]);
        if (eps > 0.0) rhs += (eps / (h * h)) * (cells[yr] - 2.0 * cells[c] + cells[yl]);
      }
      out[c] = std::move(rhs);
    }
  }
  return out;
}

}  // namespace

SpatialTrajectory integrate_spatial(const SpatialState& initial, const FlowSpec& flow,
                                    const NormalModes& modes, const ModelParams& params,
                                    const SpatialGrid& grid, double t_begin, double t_end,
                                    double dt, int output_stride) {
  check_params(params);
  check_grid(grid);
  if (static_cast<int>(initial.cells.size()) != grid.cell_count())
    throw std::invalid_argument("integrate_spatial: cell count mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_spatial: dt must be positive");
  if (output_stride < 1) throw std::invalid_argument("integrate_spatial: bad output stride");
  for (const auto& c : initial.cells) check_covariance(c);

  // CFL-type admissibility
  double max_speed = 0.0;
  for (int j = 0; j < (grid.dim > 1 ? grid.cells[1] : 1); ++j)
    for (int i = 0; i < grid.cells[0]; ++i)
      max_speed = std::max(max_speed,
                           flow.velocity(t_begin, grid.center(i, j)).cwiseAbs().maxCoeff());
  double admissible = std::numeric_limits<double>::infinity();
  if (max_speed > 0.0) admissible = std::min(admissible, 0.5 * grid.spacing / max_speed);
  if (params.center_diffusion > 0.0)
    admissible = std::min(admissible, 0.5 * grid.spacing * grid.spacing /
                                          (2.0 * grid.dim * params.center_diffusion));
  if (dt > admissible) {
    std::ostringstream msg;
    msg << "integrate_spatial: dt = " << dt << " violates stability bound, need dt <= "
        << admissible;
    throw std::invalid_argument(msg.str());
  }

  const long n_steps = std::lround((t_end - t_begin) / dt);
  SpatialTrajectory traj;
  traj.times.push_back(t_begin);
  traj.states.push_back(initial);

  SpatialState state = initial;
  const int n_cells = grid.cell_count();
  for (long k = 0; k < n_steps; ++k) {
    const double t = t_begin + k * dt;
    const auto k1 = spatial_rhs(state.cells, flow, modes, params, grid, t);
    std::vector<BlockCovariance> stage(n_cells);
    for (int c = 0; c < n_cells; ++c) stage[c] = state.cells[c] + (0.5 * dt) * k1[c];
    const auto k2 = spatial_rhs(stage, flow, modes, params, grid, t + 0.5 * dt);
    for (int c = 0; c < n_cells; ++c) stage[c] = state.cells[c] + (0.5 * dt) * k2[c];
    const auto k3 = spatial_rhs(stage, flow, modes, params, grid, t + 0.5 * dt);
    for (int c = 0; c < n_cells; ++c) stage[c] = state.cells[c] + dt * k3[c];
    const auto k4 = spatial_rhs(stage, flow, modes, params, grid, t + dt);

    for (int c = 0; c < n_cells; ++c) {
      state.cells[c] += (dt / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
      state.cells[c].symmetrize();
      if (!is_valid_covariance(state.cells[c])) {
        std::ostringstream msg;
        msg << "integrate_spatial: cell " << c << " lost positive definiteness at t = "
            << t_begin + (k + 1) * dt;
        throw std::runtime_error(msg.str());
      }
    }
    if ((k + 1) % output_stride == 0 || k + 1 == n_steps) {
      traj.times.push_back(t_begin + (k + 1) * dt);
      traj.states.push_back(state);
    }
  }
  return traj;
}

namespace {

double block_defect(const Eigen::MatrixXd& tau_prev, const Eigen::MatrixXd& tau_mid,
                    const Eigen::MatrixXd& tau_next, double two_dt,
                    const Eigen::MatrixXd& grad_u, double lambda, const ModelParams& params,
                    const Eigen::MatrixXd& advected, const Eigen::MatrixXd& laplacian) {
  const Eigen::MatrixXd time_deriv = (tau_next - tau_prev) / two_dt;
  const Eigen::MatrixXd lhs = time_deriv + advected -
                              (grad_u * tau_mid + tau_mid * grad_u.transpose());
  const Eigen::MatrixXd rhs = params.center_diffusion * laplacian -
                              (lambda / params.deborah) * tau_mid + grad_u +
                              grad_u.transpose();
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

}  // namespace

double upper_convected_check(const Trajectory& traj, const FlowSpec& flow,
                             const NormalModes& modes, const ModelParams& params) {
  if (traj.times.size() < 3)
    throw std::invalid_argument("upper_convected_check: need at least three time levels");

  const int d = traj.states.front().block_dim();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(d, d);

  double defect = 0.0;
  for (std::size_t k = 1; k + 1 < traj.times.size(); ++k) {
    const double two_dt = traj.times[k + 1] - traj.times[k - 1];
    const Eigen::MatrixXd grad_u = flow.gradient(traj.times[k], x);
    for (int n = 0; n < traj.states[k].n_blocks(); ++n) {
      defect = std::max(
          defect, block_defect(traj.states[k - 1].block(n) - identity,
                               traj.states[k].block(n) - identity,
                               traj.states[k + 1].block(n) - identity, two_dt, grad_u,
                               modes.eigenvalues[n], params, zero, zero));
    }
  }
  return defect;
}

double upper_convected_check(const SpatialTrajectory& traj, const FlowSpec& flow,
                             const NormalModes& modes, const ModelParams& params,
                             const SpatialGrid& grid) {
  if (traj.times.size() < 3)
    throw std::invalid_argument("upper_convected_check: need at least three time levels");
  check_grid(grid);

  const int d = traj.states.front().cells.front().block_dim();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
  const int mx = grid.cells[0];
  const int my = grid.dim > 1 ? grid.cells[1] : 1;
  const double h = grid.spacing;

  double defect = 0.0;
  for (std::size_t k = 1; k + 1 < traj.times.size(); ++k) {
    const double two_dt = traj.times[k + 1] - traj.times[k - 1];
    const double t = traj.times[k];
    const SpatialState& mid = traj.states[k];
    // interior cells only: centered spatial differences
    for (int j = (grid.dim > 1 ? 1 : 0); j < (grid.dim > 1 ? my - 1 : 1); ++j) {
      for (int i = 1; i < mx - 1; ++i) {
        const int c = grid.index(i, j);
        const Eigen::VectorXd x = grid.center(i, j);
        const Eigen::MatrixXd grad_u = flow.gradient(t, x);
        const Eigen::VectorXd u = flow.velocity(t, x);
        for (int n = 0; n < mid.cells[c].n_blocks(); ++n) {
          const auto tau = [&](const SpatialState& s, int cell) {
            return (s.cells[cell].block(n) - identity).eval();
          };
          Eigen::MatrixXd advected =
              u[0] * (tau(mid, grid.index(i + 1, j)) - tau(mid, grid.index(i - 1, j))) /
              (2.0 * h);
          Eigen::MatrixXd laplacian =
              (tau(mid, grid.index(i + 1, j)) - 2.0 * tau(mid, c) +
               tau(mid, grid.index(i - 1, j))) /
              (h * h);
          if (grid.dim > 1) {
            advected += u[1] *
                        (tau(mid, grid.index(i, j + 1)) - tau(mid, grid.index(i, j - 1))) /
                        (2.0 * h);
            laplacian += (tau(mid, grid.index(i, j + 1)) - 2.0 * tau(mid, c) +
                          tau(mid, grid.index(i, j - 1))) /
                         (h * h);
          }
          defect = std::max(defect,
                            block_defect(tau(traj.states[k - 1], c), tau(mid, c),
                                         tau(traj.states[k + 1], c), two_dt, grad_u,
                                         modes.eigenvalues[n], params, advected, laplacian));
        }
      }
    }
  }
  return defect;
}

}  // namespace polyfp
