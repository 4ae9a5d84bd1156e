#include "polyfp/reference.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "polyfp/rng.hpp"

namespace polyfp {

namespace rng {

void normal_pair(std::uint64_t seed, std::uint64_t particle, std::uint64_t step,
                 std::uint64_t pair_index, double& n0, double& n1) {
  const double u0 = to_uniform(counter_value(seed, particle, step, 2 * pair_index));
  const double u1 = to_uniform(counter_value(seed, particle, step, 2 * pair_index + 1));
  const double radius = std::sqrt(-2.0 * std::log(u0));
  const double angle = 2.0 * std::numbers::pi * u1;
  n0 = radius * std::cos(angle);
  n1 = radius * std::sin(angle);
}

}  // namespace rng

namespace {

constexpr std::uint64_t kInitStep = 0xFFFFFFu;  // reserved step index for sampling

void parallel_over_particles(int n_particles, const std::function<void(int, int)>& work) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int n_threads = static_cast<int>(std::min<unsigned>(hw, 8));
  if (n_threads <= 1 || n_particles < 4096) {
    work(0, n_particles);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n_particles + n_threads - 1) / n_threads;
  for (int t = 0; t < n_threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n_particles, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(work, begin, end);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

Ensemble sample_gaussian_ensemble(int n_particles, const BlockCovariance& cov,
                                  std::uint64_t seed) {
  if (n_particles < 1) throw std::invalid_argument("ensemble needs at least one particle");
  check_covariance(cov);

  const int D = cov.dim();
  const int d = cov.block_dim();
  std::vector<Eigen::MatrixXd> factors;
  for (int n = 0; n < cov.n_blocks(); ++n) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov.block(n));
    if (llt.info() != Eigen::Success)
      throw std::domain_error("sample_gaussian_ensemble: covariance not positive definite");
    factors.push_back(llt.matrixL());
  }

  Ensemble ens;
  ens.rng_seed = seed;
  ens.particles.resize(D, n_particles);

  parallel_over_particles(n_particles, [&](int begin, int end) {
    Eigen::VectorXd xi(D);
    for (int p = begin; p < end; ++p) {
      for (int k = 0; 2 * k < D; ++k) {
        double a, b;
        rng::normal_pair(seed, static_cast<std::uint64_t>(p), kInitStep,
                         static_cast<std::uint64_t>(k), a, b);
        xi[2 * k] = a;
        if (2 * k + 1 < D) xi[2 * k + 1] = b;
      }
      for (int n = 0; n < cov.n_blocks(); ++n)
        ens.particles.col(p).segment(n * d, d) = factors[n] * xi.segment(n * d, d);
    }
  });
  return ens;
}

void sde_step(Ensemble& ensemble, const std::vector<Eigen::MatrixXd>& M_blocks,
              const NormalModes& modes, double De, double dt) {
  if (!(dt >= 0.0)) throw std::invalid_argument("sde_step: dt must be nonnegative");
  if (!(De > 0.0)) throw std::invalid_argument("sde_step: De must be positive");
  const int N = static_cast<int>(M_blocks.size());
  if (N != modes.eigenvalues.size()) throw std::invalid_argument("sde_step: block count mismatch");
  const int d = N > 0 ? static_cast<int>(M_blocks[0].rows()) : 0;
  const int D = N * d;
  if (ensemble.dim() != D) throw std::invalid_argument("sde_step: dimension mismatch");

  double max_norm = 0.0;
  for (const auto& m : M_blocks)
    max_norm = std::max(max_norm, m.cwiseAbs().rowwise().sum().maxCoeff());
  if (dt * max_norm > 0.1)
    throw std::invalid_argument("sde_step: dt too large for the drift (dt·‖M‖ > 0.1)");

  if (dt == 0.0) return;

  Eigen::VectorXd noise_scale(D);
  for (int n = 0; n < N; ++n)
    noise_scale.segment(n * d, d).setConstant(std::sqrt(dt / De * modes.eigenvalues[n]));

  const std::uint64_t step = ensemble.steps_taken;
  const std::uint64_t seed = ensemble.rng_seed;
  auto& particles = ensemble.particles;

  parallel_over_particles(ensemble.size(), [&](int begin, int end) {
    Eigen::VectorXd drift(D);
    Eigen::VectorXd xi(D);
    for (int p = begin; p < end; ++p) {
      auto q = particles.col(p);
      for (int n = 0; n < N; ++n)
        drift.segment(n * d, d).noalias() = M_blocks[n] * q.segment(n * d, d);
      for (int k = 0; 2 * k < D; ++k) {
        double a, b;
        rng::normal_pair(seed, static_cast<std::uint64_t>(p), step,
                         static_cast<std::uint64_t>(k), a, b);
        xi[2 * k] = a;
        if (2 * k + 1 < D) xi[2 * k + 1] = b;
      }
      q -= dt * drift;
      q.array() += noise_scale.array() * xi.array();
    }
  });
  ensemble.steps_taken += 1;
}

MomentEstimate empirical_moments(const Ensemble& ensemble) {
  const int P = ensemble.size();
  if (P < 2) throw std::invalid_argument("empirical_moments: need at least two particles");
  const int D = ensemble.dim();

  MomentEstimate est;
  est.sample_size = P;
  est.second_moment = Eigen::MatrixXd::Zero(D, D);
  Eigen::MatrixXd sum_sq = Eigen::MatrixXd::Zero(D, D);

  for (int p = 0; p < P; ++p) {
    const auto q = ensemble.particles.col(p);
    for (int i = 0; i < D; ++i) {
      for (int j = 0; j < D; ++j) {
        const double v = q[i] * q[j];
        est.second_moment(i, j) += v;
        sum_sq(i, j) += v * v;
      }
    }
  }
  est.second_moment /= P;
  est.standard_error.resize(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      const double mean = est.second_moment(i, j);
      const double var = (sum_sq(i, j) / P - mean * mean) * P / (P - 1.0);
      est.standard_error(i, j) = std::sqrt(std::max(0.0, var) / P);
    }
  return est;
}

double GridDensity::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= spacing();
  return v;
}

double GridDensity::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell_volume();
}

double GridDensity::boundary_mass() const {
  const int m = cells_per_axis;
  double s = 0.0;
  if (dim == 1) {
    s = values[0] + values[m - 1];
  } else {
    for (int i = 0; i < m; ++i)
      s += values[i] + values[(m - 1) * m + i];
    for (int j = 1; j + 1 < m; ++j)
      s += values[j * m] + values[j * m + m - 1];
  }
  return s * cell_volume();
}

GridDensity gaussian_grid(double half_width, int cells_per_axis, const BlockCovariance& cov) {
  if (cov.dim() > 2) throw std::invalid_argument("gaussian_grid: only D <= 2 supported");
  if (cells_per_axis < 4) throw std::invalid_argument("gaussian_grid: need at least 4 cells");
  if (!(half_width > 0.0)) throw std::invalid_argument("gaussian_grid: bad half width");

  GridDensity grid;
  grid.half_width = half_width;
  grid.cells_per_axis = cells_per_axis;
  grid.dim = cov.dim();

  const int m = cells_per_axis;
  if (grid.dim == 1) {
    grid.values.resize(m);
    Eigen::VectorXd q(1);
    for (int i = 0; i < m; ++i) {
      q[0] = grid.center(i);
      grid.values[i] = density(cov, q);
    }
  } else {
    grid.values.resize(static_cast<std::size_t>(m) * m);
    Eigen::VectorXd q(2);
    for (int j = 0; j < m; ++j) {
      q[1] = grid.center(j);
      for (int i = 0; i < m; ++i) {
        q[0] = grid.center(i);
        grid.values[static_cast<std::size_t>(j) * m + i] = density(cov, q);
      }
    }
  }
  return grid;
}

namespace {

/// Dense drift matrix and per-axis diffusion coefficients for the D ≤ 2 grid.
struct GridOperator {
  Eigen::MatrixXd M;            // D×D
  Eigen::VectorXd diffusion;    // per axis, λ_n/(2De)
};

GridOperator assemble_operator(const std::vector<Eigen::MatrixXd>& M_blocks,
                               const NormalModes& modes, double De, int D) {
  const int N = static_cast<int>(M_blocks.size());
  const int d = static_cast<int>(M_blocks[0].rows());
  if (N * d != D) throw std::invalid_argument("grid_evolve: operator dimension mismatch");
  GridOperator op;
  op.M = Eigen::MatrixXd::Zero(D, D);
  op.diffusion.resize(D);
  for (int n = 0; n < N; ++n) {
    op.M.block(n * d, n * d, d, d) = M_blocks[n];
    op.diffusion.segment(n * d, d).setConstant(modes.eigenvalues[n] / (2.0 * De));
  }
  return op;
}

}  // namespace

GridEvolveReport grid_evolve(GridDensity& density, const std::vector<Eigen::MatrixXd>& M_blocks,
                             const NormalModes& modes, double De, double t_begin, double t_end,
                             double dt) {
  if (density.dim < 1 || density.dim > 2)
    throw std::invalid_argument("grid_evolve: only D <= 2 supported");
  if (!(dt > 0.0)) throw std::invalid_argument("grid_evolve: dt must be positive");
  const int D = density.dim;
  const int m = density.cells_per_axis;
  const double h = density.spacing();
  const double L = density.half_width;
  const GridOperator op = assemble_operator(M_blocks, modes, De, D);

  // CFL-type bound: max face drift speed per axis plus diffusion
  const double max_coord = L;
  double rate = 0.0;
  for (int a = 0; a < D; ++a) {
    const double max_drift = op.M.row(a).cwiseAbs().sum() * max_coord;
    rate += max_drift / h + 2.0 * op.diffusion[a] / (h * h);
  }
  if (dt * rate > 1.0) {
    std::ostringstream msg;
    msg << "grid_evolve: dt = " << dt << " violates stability bound, need dt <= " << 1.0 / rate;
    throw std::invalid_argument(msg.str());
  }

  GridEvolveReport report;
  const long n_steps = std::lround((t_end - t_begin) / dt);
  const double cell_volume = density.cell_volume();

  std::vector<double> next(density.values.size());
  // face drift velocity: b(q) = -M q evaluated at face centers
  const auto face_coord = [&](int idx) { return -L + idx * h; };

  if (D == 1) {
    std::vector<double> flux(m + 1, 0.0);
    for (long s = 0; s < n_steps; ++s) {
      auto& v = density.values;
      flux[0] = flux[m] = 0.0;  // no-flux walls
      for (int i = 1; i < m; ++i) {
        const double b = -op.M(0, 0) * face_coord(i);
        const double upwind = b > 0.0 ? v[i - 1] : v[i];
        flux[i] = b * upwind - op.diffusion[0] * (v[i] - v[i - 1]) / h;
      }
      for (int i = 0; i < m; ++i) {
        double value = v[i] - dt / h * (flux[i + 1] - flux[i]);
        if (value < 0.0) {
          report.clipped_mass += -value * cell_volume;
          value = 0.0;
        }
        next[i] = value;
      }
      density.values.swap(next);
      ++report.steps;
    }
  } else {
    for (long s = 0; s < n_steps; ++s) {
      const auto& v = density.values;
      const auto at = [&](int i, int j) { return v[static_cast<std::size_t>(j) * m + i]; };
      for (int j = 0; j < m; ++j) {
        const double y = density.center(j);
        for (int i = 0; i < m; ++i) {
          const double x = density.center(i);
          double div_flux = 0.0;

          // x-faces at i and i+1
          for (int face = 0; face <= 1; ++face) {
            const int fi = i + face;
            double flux = 0.0;
            if (fi > 0 && fi < m) {
              const double qx = face_coord(fi);
              const double b = -(op.M(0, 0) * qx + op.M(0, 1) * y);
              const double upwind = b > 0.0 ? at(fi - 1, j) : at(fi, j);
              flux = b * upwind - op.diffusion[0] * (at(fi, j) - at(fi - 1, j)) / h;
            }
            div_flux += (face == 1 ? flux : -flux);
          }
          // y-faces at j and j+1
          for (int face = 0; face <= 1; ++face) {
            const int fj = j + face;
            double flux = 0.0;
            if (fj > 0 && fj < m) {
              const double qy = face_coord(fj);
              const double b = -(op.M(1, 0) * x + op.M(1, 1) * qy);
              const double upwind = b > 0.0 ? at(i, fj - 1) : at(i, fj);
              flux = b * upwind - op.diffusion[1] * (at(i, fj) - at(i, fj - 1)) / h;
            }
            div_flux += (face == 1 ? flux : -flux);
          }

          double value = at(i, j) - dt / h * div_flux;
          if (value < 0.0) {
            report.clipped_mass += -value * cell_volume;
            value = 0.0;
          }
          next[static_cast<std::size_t>(j) * m + i] = value;
        }
      }
      density.values.swap(next);
      ++report.steps;
    }
  }

  report.boundary_mass = density.boundary_mass();
  if (report.boundary_mass > 1e-6) {
    std::ostringstream msg;
    msg << "boundary mass " << report.boundary_mass << " exceeds 1e-6; truncation box too small";
    report.warnings.push_back(msg.str());
  }
  return report;
}

double density_l1_gap(const GridDensity& grid, const BlockCovariance& cov) {
  if (cov.dim() != grid.dim) throw std::invalid_argument("density_l1_gap: dimension mismatch");
  const int m = grid.cells_per_axis;
  double gap = 0.0;
  if (grid.dim == 1) {
    Eigen::VectorXd q(1);
    for (int i = 0; i < m; ++i) {
      q[0] = grid.center(i);
      gap += std::abs(grid.values[i] - density(cov, q));
    }
  } else {
    Eigen::VectorXd q(2);
    for (int j = 0; j < m; ++j) {
      q[1] = grid.center(j);
      for (int i = 0; i < m; ++i) {
        q[0] = grid.center(i);
        gap += std::abs(grid.values[static_cast<std::size_t>(j) * m + i] - density(cov, q));
      }
    }
  }
  return gap * grid.cell_volume();
}

ClosureComparison compare_closure(const std::vector<MomentEstimate>& oracle,
                                  const std::vector<double>& oracle_times,
                                  const Trajectory& closure) {
  if (oracle.size() != oracle_times.size())
    throw std::invalid_argument("compare_closure: oracle series length mismatch");

  ClosureComparison cmp;
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < oracle_times.size(); ++k) {
    // locate the matching closure time
    while (cursor < closure.times.size() &&
           closure.times[cursor] < oracle_times[k] - 1e-9)
      ++cursor;
    if (cursor >= closure.times.size() ||
        std::abs(closure.times[cursor] - oracle_times[k]) > 1e-9)
      throw std::invalid_argument("compare_closure: time grids do not match");

    const BlockCovariance& state = closure.states[cursor];
    const Eigen::MatrixXd closure_moment = state.dense();
    const int D = state.dim();
    Eigen::MatrixXd z(D, D);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        const double se = oracle[k].standard_error(i, j);
        const double gap = oracle[k].second_moment(i, j) - closure_moment(i, j);
        z(i, j) = se > 0.0 ? gap / se : (gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        cmp.max_abs_z = std::max(cmp.max_abs_z, std::abs(z(i, j)));
      }
    cmp.times.push_back(oracle_times[k]);
    cmp.z_scores.push_back(std::move(z));
  }
  return cmp;
}

}  // namespace polyfp
