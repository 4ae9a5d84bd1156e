#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

#include "polyfp/chain.hpp"
#include "polyfp/gaussian.hpp"

namespace polyfp {

/// Dimensionless model constants.
struct ModelParams {
  double deborah = 1.0;           // De > 0
  double center_diffusion = 0.0;  // ε ≥ 0
};

void check_params(const ModelParams& params);

/// Prescribed velocity field with its Jacobian.
struct FlowSpec {
  using VelocityFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
  using GradientFn = std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)>;

  VelocityFn velocity;
  GradientFn gradient;

  static FlowSpec zero(int space_dim);
  /// ∇u = rate · e₁e₂ᵀ (u₁ = rate · x₂)
  static FlowSpec simple_shear(double rate, int space_dim = 2);
  /// ∇u = diag(rate, -rate)
  static FlowSpec planar_extension(double rate);
  static FlowSpec custom(VelocityFn velocity, GradientFn gradient);
};

/// Deformation blocks M_n = λ_n/(2De) I_d - ∇u(t, x).
std::vector<Eigen::MatrixXd> deformation_blocks(const FlowSpec& flow, double t,
                                                const Eigen::VectorXd& x, const NormalModes& modes,
                                                const ModelParams& params);

/// Reaction term of the conformation block equation:
/// (λ_n/De) I - M_n C_n - C_n M_nᵀ. Symmetric for symmetric C_n.
Eigen::MatrixXd rhs_block(const Eigen::MatrixXd& C_n, const Eigen::MatrixXd& M_n, double lambda_n,
                          const ModelParams& params);

struct Trajectory {
  std::vector<double> times;
  std::vector<BlockCovariance> states;
};

/// Classical RK4 integration of the spatially homogeneous closure ODE.
/// Every accepted state is symmetrized and checked SPD; a failing step is
/// retried on halved substeps down to dt/2^10 before giving up.
Trajectory integrate_homogeneous(const BlockCovariance& initial, const FlowSpec& flow,
                                 const NormalModes& modes, const ModelParams& params,
                                 double t_begin, double t_end, double dt, int output_stride = 1);

/// Steady state of one block: solves M C + C Mᵀ = (λ/De) I over symmetric
/// matrices via the d(d+1)/2-dimensional linear system. Requires the
/// eigenvalues of M to have positive real part.
Eigen::MatrixXd lyapunov_steady(const Eigen::MatrixXd& M, double lambda, double De);

/// Uniform cell-centered grid over a box, dim 1 or 2.
struct SpatialGrid {
  int dim = 1;
  std::array<int, 2> cells = {4, 1};   // cells[1] == 1 when dim == 1
  double spacing = 1.0;                // h, identical on all axes
  std::array<double, 2> origin = {0.0, 0.0};  // lower corner of the box

  int cell_count() const { return cells[0] * (dim > 1 ? cells[1] : 1); }
  int index(int i, int j) const { return j * cells[0] + i; }
  Eigen::VectorXd center(int i, int j) const;
};

void check_grid(const SpatialGrid& grid);

/// Per-cell covariance field, row-major over the grid.
struct SpatialState {
  std::vector<BlockCovariance> cells;

  static SpatialState uniform(const SpatialGrid& grid, const BlockCovariance& value);
};

struct SpatialTrajectory {
  std::vector<double> times;
  std::vector<SpatialState> states;
};

/// Method-of-lines integration of the full closure PDE: first-order upwind
/// advection, central diffusion with mirror ghost cells (homogeneous
/// Neumann), RK4 in time. Rejects dt violating
/// dt ≤ min(h/max|u_i| · ½, h²/(2·dim·ε) · ½).
SpatialTrajectory integrate_spatial(const SpatialState& initial, const FlowSpec& flow,
                                    const NormalModes& modes, const ModelParams& params,
                                    const SpatialGrid& grid, double t_begin, double t_end,
                                    double dt, int output_stride = 1);

/// Max defect of the upper-convected extra-stress equation
/// 𝒟τ_n/𝒟t = ε Δτ_n - (λ_n/De) τ_n + ∇u + ∇uᵀ evaluated by centered time
/// differences on a stored homogeneous trajectory. Needs ≥ 3 time levels.
double upper_convected_check(const Trajectory& traj, const FlowSpec& flow,
                             const NormalModes& modes, const ModelParams& params);

/// Same check on a spatial trajectory: advection and diffusion terms by
/// centered differences on interior cells.
double upper_convected_check(const SpatialTrajectory& traj, const FlowSpec& flow,
                             const NormalModes& modes, const ModelParams& params,
                             const SpatialGrid& grid);

}  // namespace polyfp
