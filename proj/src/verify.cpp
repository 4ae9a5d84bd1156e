#include "polyfp/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "polyfp/dynamics.hpp"
#include "polyfp/gaussian.hpp"
#include "polyfp/quadrature.hpp"
#include "polyfp/reference.hpp"
#include "polyfp/variational.hpp"

namespace polyfp {

namespace {

Eigen::MatrixXd random_symmetric(std::mt19937_64& gen, int d, double scale) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = normal(gen);
  return scale * 0.5 * (g + g.transpose());
}

Eigen::MatrixXd random_spd(std::mt19937_64& gen, int d, double lo, double hi) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = normal(gen);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::VectorXd eigs(d);
  for (int i = 0; i < d; ++i) eigs[i] = unif(gen);
  Eigen::MatrixXd spd = q * eigs.asDiagonal() * q.transpose();
  return 0.5 * (spd + spd.transpose());
}

BlockCovariance random_block_covariance(std::mt19937_64& gen, int N, int d) {
  std::vector<Eigen::MatrixXd> blocks;
  for (int n = 0; n < N; ++n) blocks.push_back(random_spd(gen, d, 0.5, 2.5));
  return BlockCovariance(std::move(blocks));
}

BlockDiag random_block_symmetric(std::mt19937_64& gen, int N, int d, double scale) {
  std::vector<Eigen::MatrixXd> blocks;
  for (int n = 0; n < N; ++n) blocks.push_back(random_symmetric(gen, d, scale));
  return BlockDiag(std::move(blocks));
}

CriterionResult make_result(const std::string& name, double observed, double threshold,
                            bool larger_is_better = false, const std::string& detail = "") {
  CriterionResult r;
  r.name = name;
  r.observed = observed;
  r.threshold = threshold;
  r.larger_is_better = larger_is_better;
  r.pass = larger_is_better ? observed > threshold : observed <= threshold;
  r.detail = detail;
  return r;
}

SuiteReport suite_orthogonality() {
  SuiteReport report;
  report.suite = "orthogonality";
  std::mt19937_64 gen(0x5EED0001ULL);

  for (const auto [N, d] : {std::pair{1, 2}, std::pair{2, 2}}) {
    const TensorRule rule = tensor_rule(N * d, 4);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const BlockCovariance cov = random_block_covariance(gen, N, d);
      SpatialDerivatives deriv;
      for (int axis = 0; axis < d; ++axis)
        deriv.grad.push_back(random_block_symmetric(gen, N, d, 1.0));
      worst = std::max(worst, check_remainder_orthogonality(deriv, cov, rule));
    }
    std::ostringstream name;
    name << "remainder moments N=" << N << " d=" << d;
    report.criteria.push_back(make_result(name.str(), worst, 1e-10));
  }
  report.pass = report.criteria[0].pass && report.criteria[1].pass;
  return report;
}

SuiteReport suite_tangency() {
  SuiteReport report;
  report.suite = "tangency";
  std::mt19937_64 gen(0x5EED0002ULL);
  std::uniform_real_distribution<double> rate(-1.0, 1.0);

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int N = (trial % 2) + 1;
    const int d = 2;
    const double De = 0.5 + 0.1 * (trial % 7);
    const BlockCovariance cov = random_block_covariance(gen, N, d);
    const NormalModes modes = rouse_modes(ChainSpec{N, d});

    Eigen::MatrixXd grad_u(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) grad_u(i, j) = rate(gen);
    std::vector<Eigen::MatrixXd> M_blocks;
    for (int n = 0; n < N; ++n)
      M_blocks.push_back((modes.eigenvalues[n] / (2.0 * De)) *
                             Eigen::MatrixXd::Identity(d, d) -
                         grad_u);

    const TensorRule rule = tensor_rule(N * d, 6);
    const auto basis = tangent_basis(cov);
    const auto action = [&](const Eigen::VectorXd& q) {
      return configurational_action(M_blocks, modes.eigenvalues, De, cov, q);
    };
    const Eigen::VectorXd coeffs = project_coefficients(action, basis, cov, rule);

    std::vector<double> traces(basis.size());
    for (std::size_t m = 0; m < basis.size(); ++m) traces[m] = basis[m].trace_product(cov);

    double norm_sq = 0.0;
    double dist_sq = 0.0;
    for_each_gaussian_node(cov, rule, [&](const Eigen::VectorXd& q, double w) {
      const double target = action(q) / density(cov, q);
      double projected = 0.0;
      for (std::size_t m = 0; m < basis.size(); ++m)
        projected += coeffs[m] * (basis[m].quad_form(q) - traces[m]);
      norm_sq += w * target * target;
      const double r = target - projected;
      dist_sq += w * r * r;
    });
    worst = std::max(worst, std::sqrt(dist_sq / norm_sq));
  }
  report.criteria.push_back(make_result("relative distance to tangent space", worst, 1e-9));
  report.pass = report.criteria[0].pass;
  return report;
}

SuiteReport suite_equivalence() {
  SuiteReport report;
  report.suite = "equivalence";

  const int N = 2, d = 2;
  const double De = 1.0, shear_rate = 1.0, t_end = 5.0, dt = 1e-3;
  const int particles = 100000;
  const std::uint64_t seed = 20260810ULL;

  const ChainSpec spec{N, d};
  const NormalModes modes = rouse_modes(spec);
  const ModelParams params{De, 0.0};
  const FlowSpec flow = FlowSpec::simple_shear(shear_rate, d);
  const BlockCovariance initial = BlockCovariance::Identity(N, d);

  const Trajectory closure =
      integrate_homogeneous(initial, flow, modes, params, 0.0, t_end, dt, 500);

  Ensemble ens = sample_gaussian_ensemble(particles, initial, seed);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  const auto M_blocks = deformation_blocks(flow, 0.0, x, modes, params);

  std::vector<MomentEstimate> series;
  std::vector<double> times;
  const long n_steps = std::lround(t_end / dt);
  for (long k = 0; k < n_steps; ++k) {
    sde_step(ens, M_blocks, modes, De, dt);
    if ((k + 1) % 500 == 0) {
      series.push_back(empirical_moments(ens));
      times.push_back((k + 1) * dt);
    }
  }

  const ClosureComparison cmp = compare_closure(series, times, closure);
  std::ostringstream detail;
  detail << "P=" << particles << " dt=" << dt << " seed=" << seed << " outputs=" << times.size();
  report.criteria.push_back(
      make_result("max |z| over 10 output times", cmp.max_abs_z, 3.0, false, detail.str()));
  report.pass = report.criteria[0].pass;
  return report;
}

double grid_shear_l1_error(int cells, double t_end, const BlockCovariance& reference_state,
                           const NormalModes& modes, const ModelParams& params,
                           const FlowSpec& flow) {
  const double half_width = 10.0;
  const int d = 2;
  const BlockCovariance initial = BlockCovariance::Identity(1, d);
  GridDensity grid = gaussian_grid(half_width, cells, initial);

  const Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  const auto M_blocks = deformation_blocks(flow, 0.0, x, modes, params);

  // monotone explicit step: dt · (drift/h + diffusion/h²) budget ≤ 0.9
  const double h = grid.spacing();
  Eigen::MatrixXd M = M_blocks[0];
  double rate = 0.0;
  for (int a = 0; a < d; ++a)
    rate += M.row(a).cwiseAbs().sum() * half_width / h +
            2.0 * (modes.eigenvalues[0] / (2.0 * params.deborah)) / (h * h);
  const long n_steps = std::lround(std::ceil(t_end * rate / 0.9));
  const double dt = t_end / static_cast<double>(n_steps);

  grid_evolve(grid, M_blocks, modes, params.deborah, 0.0, t_end, dt);
  return density_l1_gap(grid, reference_state);
}

SuiteReport suite_exactness() {
  SuiteReport report;
  report.suite = "exactness";

  const int N = 1, d = 2;
  const double De = 1.0, t_end = 1.0;
  const ChainSpec spec{N, d};
  const NormalModes modes = rouse_modes(spec);
  const ModelParams params{De, 0.0};
  const FlowSpec flow = FlowSpec::simple_shear(1.0, d);

  const Trajectory closure = integrate_homogeneous(BlockCovariance::Identity(N, d), flow, modes,
                                                   params, 0.0, t_end, 1e-4, 10000);
  const BlockCovariance& final_state = closure.states.back();

  const double coarse = grid_shear_l1_error(256, t_end, final_state, modes, params, flow);
  const double fine = grid_shear_l1_error(512, t_end, final_state, modes, params, flow);
  const double ratio = coarse / fine;

  report.criteria.push_back(make_result("L1 gap at 256^2 cells", coarse, 5e-3));
  std::ostringstream detail;
  detail << "coarse=" << coarse << " fine=" << fine;
  CriterionResult refinement = make_result("h-refinement gain within [1.5, 2.7]", ratio, 1.5,
                                           true, detail.str());
  refinement.pass = ratio >= 1.5 && ratio <= 2.7;
  report.criteria.push_back(refinement);
  report.pass = report.criteria[0].pass && report.criteria[1].pass;
  return report;
}

double trajectory_min_eigenvalue(const Trajectory& traj) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& state : traj.states) {
    for (int n = 0; n < state.n_blocks(); ++n) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.block(n), Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
    }
  }
  return lo;
}

SuiteReport suite_spd() {
  SuiteReport report;
  report.suite = "spd";

  const int N = 2, d = 2;
  const ChainSpec spec{N, d};
  const NormalModes modes = rouse_modes(spec);
  const ModelParams params{1.0, 0.0};

  // strong shear, γ̇ De = 5
  {
    const Trajectory traj =
        integrate_homogeneous(BlockCovariance::Identity(N, d), FlowSpec::simple_shear(5.0, d),
                              modes, params, 0.0, 10.0, 1e-3, 100);
    report.criteria.push_back(
        make_result("min eigenvalue, shear gammadot*De=5 to T=10",
                    trajectory_min_eigenvalue(traj), 0.0, true));
  }

  // oscillatory planar extension, |rate| De = 0.4 below the λ/(2De) bound
  {
    const double amplitude = 0.4;
    const FlowSpec flow = FlowSpec::custom(
        [](double t, const Eigen::VectorXd& x) {
          Eigen::MatrixXd g(2, 2);
          g << 0.4 * std::cos(t), 0.0, 0.0, -0.4 * std::cos(t);
          return (g * x).eval();
        },
        [amplitude](double t, const Eigen::VectorXd&) {
          Eigen::MatrixXd g(2, 2);
          g << amplitude * std::cos(t), 0.0, 0.0, -amplitude * std::cos(t);
          return g;
        });
    const Trajectory traj = integrate_homogeneous(BlockCovariance::Identity(N, d), flow, modes,
                                                  params, 0.0, 10.0, 1e-3, 100);
    report.criteria.push_back(make_result("min eigenvalue, oscillatory extension to T=10",
                                          trajectory_min_eigenvalue(traj), 0.0, true));
  }

  // spatial run with diffusion: min eigenvalue over all cells and times
  {
    const ModelParams spatial_params{1.0, 0.01};
    SpatialGrid grid;
    grid.dim = 2;
    grid.cells = {12, 12};
    grid.spacing = 1.0 / 12.0;
    grid.origin = {0.0, 0.0};

    std::mt19937_64 gen(0x5EED0007ULL);
    SpatialState initial;
    for (int c = 0; c < grid.cell_count(); ++c) {
      std::vector<Eigen::MatrixXd> blocks;
      for (int n = 0; n < N; ++n) blocks.push_back(random_spd(gen, d, 0.6, 2.0));
      initial.cells.emplace_back(std::move(blocks));
    }
    const SpatialTrajectory traj = integrate_spatial(initial, FlowSpec::zero(d), modes,
                                                     spatial_params, grid, 0.0, 2.0, 5e-3, 40);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& state : traj.states)
      for (const auto& cell : state.cells)
        for (int n = 0; n < cell.n_blocks(); ++n) {
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cell.block(n),
                                                            Eigen::EigenvaluesOnly);
          lo = std::min(lo, es.eigenvalues().minCoeff());
        }
    report.criteria.push_back(
        make_result("min eigenvalue, diffusive spatial field to T=2", lo, 0.0, true));
  }

  report.pass = true;
  for (const auto& c : report.criteria) report.pass = report.pass && c.pass;
  return report;
}

SuiteReport suite_residual() {
  SuiteReport report;
  report.suite = "residual";
  std::mt19937_64 gen(0x5EED0009ULL);

  double worst = 0.0;
  for (const auto [N, d] : {std::pair{1, 2}, std::pair{2, 2}}) {
    const NormalModes modes = rouse_modes(ChainSpec{N, d});
    const double De = 1.2;
    const double eps = 0.1;

    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      // analytic covariance field C(x) = B + a sin(k·x) S, evaluated at x0
      Eigen::VectorXd x0(d);
      for (int a = 0; a < d; ++a) x0[a] = unit(gen);
      std::vector<Eigen::MatrixXd> base, bump;
      for (int n = 0; n < N; ++n) {
        base.push_back(random_spd(gen, d, 1.0, 2.0));
        bump.push_back(random_symmetric(gen, d, 0.2));
      }
      Eigen::VectorXd wave(d);
      for (int a = 0; a < d; ++a) wave[a] = 0.5 + 0.3 * a;
      const double phase = wave.dot(x0);

      std::vector<Eigen::MatrixXd> cov_blocks;
      for (int n = 0; n < N; ++n) cov_blocks.push_back(base[n] + std::sin(phase) * bump[n]);
      const BlockCovariance cov{cov_blocks};

      SpatialDerivatives deriv;
      for (int a = 0; a < d; ++a) {
        std::vector<Eigen::MatrixXd> grad_blocks;
        for (int n = 0; n < N; ++n)
          grad_blocks.push_back(wave[a] * std::cos(phase) * bump[n]);
        deriv.grad.emplace_back(std::move(grad_blocks));
      }
      std::vector<Eigen::MatrixXd> lap_blocks;
      for (int n = 0; n < N; ++n)
        lap_blocks.push_back(-wave.squaredNorm() * std::sin(phase) * bump[n]);
      const BlockDiag laplacian{lap_blocks};

      Eigen::VectorXd u(d);
      for (int a = 0; a < d; ++a) u[a] = unit(gen);
      BlockDiag advected = BlockDiag::Zero(N, d);
      for (int a = 0; a < d; ++a) advected += u[a] * deriv.grad[a];
      advected -= eps * laplacian;
      deriv.advected = advected;

      Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(d, d);
      grad_u(0, 1) = 0.8;
      std::vector<Eigen::MatrixXd> M_blocks;
      for (int n = 0; n < N; ++n)
        M_blocks.push_back((modes.eigenvalues[n] / (2.0 * De)) *
                               Eigen::MatrixXd::Identity(d, d) -
                           grad_u);

      // covariance velocity solving the closure equations of motion
      BlockDiag cov_dot = BlockDiag::Zero(N, d);
      for (int n = 0; n < N; ++n) {
        cov_dot.block(n) = -advected.block(n) +
                           (modes.eigenvalues[n] / De) * Eigen::MatrixXd::Identity(d, d) -
                           M_blocks[n] * cov.block(n) -
                           cov.block(n) * M_blocks[n].transpose();
      }

      const TensorRule rule = tensor_rule(N * d, 6);
      const double residual =
          residual_norm_sq(cov, cov_dot, M_blocks, modes.eigenvalues, deriv, De, eps, rule);

      const RemainderEvaluator rho(deriv, cov);
      double rho_sq = 0.0;
      for_each_gaussian_node(cov, rule, [&](const Eigen::VectorXd& q, double w) {
        const double r = rho(q);
        rho_sq += w * r * r;
      });
      const double expected = eps * eps * rho_sq;
      worst = std::max(worst, std::abs(residual - expected) / expected);
    }
  }
  report.criteria.push_back(
      make_result("relative gap between residual and eps^2*int(rho^2 f)", worst, 1e-9));
  report.pass = report.criteria[0].pass;
  return report;
}

}  // namespace

std::vector<std::string> verify_suite_names() {
  return {"orthogonality", "tangency", "equivalence", "exactness", "spd", "residual"};
}

SuiteReport verify_suite(const std::string& name) {
  if (name == "orthogonality") return suite_orthogonality();
  if (name == "tangency") return suite_tangency();
  if (name == "equivalence") return suite_equivalence();
  if (name == "exactness") return suite_exactness();
  if (name == "spd") return suite_spd();
  if (name == "residual") return suite_residual();
  throw std::invalid_argument("unknown verification suite: " + name);
}

std::string to_json(const SuiteReport& report) {
  nlohmann::json j;
  j["suite"] = report.suite;
  j["pass"] = report.pass;
  j["criteria"] = nlohmann::json::array();
  for (const auto& c : report.criteria) {
    j["criteria"].push_back({{"name", c.name},
                             {"observed", c.observed},
                             {"threshold", c.threshold},
                             {"comparison", c.larger_is_better ? ">" : "<="},
                             {"pass", c.pass},
                             {"detail", c.detail}});
  }
  return j.dump(2);
}

}  // namespace polyfp
