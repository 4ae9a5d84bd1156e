#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "polyfp/chain.hpp"
#include "polyfp/dynamics.hpp"
#include "polyfp/gaussian.hpp"

namespace polyfp {

/// Stochastic particle ensemble in configuration space; one column per
/// particle. The noise stream is counter-based in (seed, particle, step),
/// so trajectories are bit-identical for a given seed regardless of how
/// the particle loop is chunked across threads.
struct Ensemble {
  Eigen::MatrixXd particles;  // D×P
  std::uint64_t rng_seed = 0;
  std::uint64_t steps_taken = 0;

  int dim() const { return static_cast<int>(particles.rows()); }
  int size() const { return static_cast<int>(particles.cols()); }
};

/// Draw P particles from N(0, C).
Ensemble sample_gaussian_ensemble(int n_particles, const BlockCovariance& cov,
                                  std::uint64_t seed);

/// One Euler-Maruyama step of the configurational diffusion
///   q <- q - M q dt + sqrt(dt/De) (Λ^{1/2} ⊗ I_d) ξ,  ξ ~ N(0, I).
/// Rejects dt·max‖M_n‖ > 0.1.
void sde_step(Ensemble& ensemble, const std::vector<Eigen::MatrixXd>& M_blocks,
              const NormalModes& modes, double De, double dt);

/// Per-component second moments with their standard errors.
struct MomentEstimate {
  Eigen::MatrixXd second_moment;   // D×D, (1/P) Σ q qᵀ
  Eigen::MatrixXd standard_error;  // D×D, sd(q_i q_j)/√P
  int sample_size = 0;

  Eigen::MatrixXd block(int n, int block_dim) const {
    return second_moment.block(n * block_dim, n * block_dim, block_dim, block_dim);
  }
  Eigen::MatrixXd block_se(int n, int block_dim) const {
    return standard_error.block(n * block_dim, n * block_dim, block_dim, block_dim);
  }
};

MomentEstimate empirical_moments(const Ensemble& ensemble);

/// Discretized density on a truncated configuration box [-L, L]^D, D ≤ 2,
/// cell-centered values.
struct GridDensity {
  double half_width = 0.0;  // L
  int cells_per_axis = 0;   // m
  int dim = 0;              // D
  std::vector<double> values;  // row-major, size m^D

  double spacing() const { return 2.0 * half_width / cells_per_axis; }
  double cell_volume() const;
  double center(int axis_index) const {
    return -half_width + (axis_index + 0.5) * spacing();
  }
  double mass() const;
  /// Mass in the outermost cell layer; indicates the truncation is felt.
  double boundary_mass() const;
};

/// Initialize from the Gaussian with the given covariance (D = cov.dim() ≤ 2).
GridDensity gaussian_grid(double half_width, int cells_per_axis, const BlockCovariance& cov);

struct GridEvolveReport {
  long steps = 0;
  double clipped_mass = 0.0;    // negativity clipped away (accumulated)
  double boundary_mass = 0.0;   // at final time
  std::vector<std::string> warnings;
};

/// Conservative finite-volume evolution of the configurational density:
/// upwind drift flux with drift -M q, central diffusive flux with per-axis
/// coefficient λ_n/(2De), no-flux walls, forward Euler in time.
GridEvolveReport grid_evolve(GridDensity& density, const std::vector<Eigen::MatrixXd>& M_blocks,
                             const NormalModes& modes, double De, double t_begin, double t_end,
                             double dt);

/// L¹ distance between the grid density and the Gaussian Φ(C, ·) over the box.
double density_l1_gap(const GridDensity& density, const BlockCovariance& cov);

/// Componentwise z-scores (oracle - closure)/s.e. of ensemble moments
/// against a closure trajectory at matching times.
struct ClosureComparison {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> z_scores;  // per time, D×D
  double max_abs_z = 0.0;
};

ClosureComparison compare_closure(const std::vector<MomentEstimate>& oracle,
                                  const std::vector<double>& oracle_times,
                                  const Trajectory& closure);

}  // namespace polyfp
