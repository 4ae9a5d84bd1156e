#include <doctest.h>

#include <cmath>
#include <random>

#include "polyfp/chain.hpp"
#include "polyfp/gaussian.hpp"
#include "polyfp/quadrature.hpp"
#include "polyfp/variational.hpp"
#include "test_util.hpp"

using namespace polyfp;

namespace {

/// Finite-difference oracle for the configurational operator applied to the
/// Gaussian density: L_q f = -tr(M) f - (M q)·∇f - (1/2De) Σ_a λ_a ∂²_a f,
/// with the q-derivatives of the density taken by central differences.
double fd_configurational_action(const std::vector<Eigen::MatrixXd>& M_blocks,
                                 const Eigen::VectorXd& lambda, double De,
                                 const BlockCovariance& cov, const Eigen::VectorXd& q) {
  const int d = cov.block_dim();
  const int D = cov.dim();
  const double h = 1e-4 * (1.0 + q.norm());
  const double f0 = density(cov, q);

  double tr_M = 0.0;
  Eigen::VectorXd drift(D);
  for (std::size_t n = 0; n < M_blocks.size(); ++n) {
    tr_M += M_blocks[n].trace();
    drift.segment(n * d, d) = M_blocks[n] * q.segment(n * d, d);
  }

  double value = -tr_M * f0;
  Eigen::VectorXd shifted = q;
  for (int a = 0; a < D; ++a) {
    shifted[a] = q[a] + h;
    const double fp = density(cov, shifted);
    shifted[a] = q[a] - h;
    const double fm = density(cov, shifted);
    shifted[a] = q[a];
    const double first = (fp - fm) / (2.0 * h);
    const double second = (fp - 2.0 * f0 + fm) / (h * h);
    value -= drift[a] * first;
    value -= (0.5 / De) * lambda[a / d] * second;
  }
  return value;
}

std::vector<Eigen::MatrixXd> shear_deformation(const Eigen::VectorXd& lambda, double De,
                                               double rate, int d) {
  std::vector<Eigen::MatrixXd> blocks;
  for (Eigen::Index n = 0; n < lambda.size(); ++n) {
    Eigen::MatrixXd M = (lambda[n] / (2.0 * De)) * Eigen::MatrixXd::Identity(d, d);
    M(0, 1) -= rate;
    blocks.push_back(M);
  }
  return blocks;
}

}  // namespace

TEST_CASE("fisher inner product has the closed form 2 tr(CACB)") {
  const BlockCovariance eye = BlockCovariance::Identity(2, 2);
  const TangentCoefficient zero = BlockDiag::Zero(2, 2);
  CHECK(fisher_inner(zero, zero, eye) == 0.0);

  const TangentCoefficient identity = BlockDiag::Identity(2, 2);
  CHECK(fisher_inner(identity, identity, eye) == doctest::Approx(8.0));  // 2 D with D = 4

  // distinct diagonal units are orthogonal at the identity state
  TangentCoefficient e11 = BlockDiag::Zero(1, 2);
  e11.block(0)(0, 0) = 1.0;
  TangentCoefficient e22 = BlockDiag::Zero(1, 2);
  e22.block(0)(1, 1) = 1.0;
  CHECK(fisher_inner(e11, e22, BlockCovariance::Identity(1, 2)) == 0.0);
}

TEST_CASE("fisher inner product agrees with quadrature") {
  std::mt19937_64 gen(21);
  const TensorRule rule = tensor_rule(4, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
    const TangentCoefficient A = test::random_block_symmetric(gen, 2, 2);
    const TangentCoefficient B = test::random_block_symmetric(gen, 2, 2);
    const double closed = fisher_inner(A, B, cov);
    const double shift_a = A.trace_product(cov);
    const double shift_b = B.trace_product(cov);
    const double quad = integrate_gaussian(
        [&](const Eigen::VectorXd& q) {
          return (A.quad_form(q) - shift_a) * (B.quad_form(q) - shift_b);
        },
        cov, rule);
    CHECK(std::abs(closed - quad) <= 1e-10 * std::max(1.0, std::abs(closed)));
  }
}

TEST_CASE("fisher inner product rejects shape mismatches") {
  CHECK_THROWS_AS(fisher_inner(BlockDiag::Identity(1, 2), BlockDiag::Identity(2, 2),
                               BlockCovariance::Identity(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("tangent basis of a scalar state is 1/(c sqrt 2)") {
  for (double c : {0.5, 1.0, 2.0}) {
    const BlockCovariance cov{std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Constant(1, 1, c)}};
    const auto basis = tangent_basis(cov);
    REQUIRE(basis.size() == 1);
    CHECK(basis[0].block(0)(0, 0) == doctest::Approx(1.0 / (c * std::sqrt(2.0))).epsilon(1e-13));
  }
}

TEST_CASE("tangent basis is orthonormal and has dimension N d(d+1)/2") {
  std::mt19937_64 gen(23);

  const auto check_orthonormal = [&](const BlockCovariance& cov, int expected_size) {
    const auto basis = tangent_basis(cov);
    REQUIRE(static_cast<int>(basis.size()) == expected_size);
    for (std::size_t a = 0; a < basis.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        const double inner = fisher_inner(basis[a], basis[b], cov);
        CHECK(std::abs(inner - (a == b ? 1.0 : 0.0)) <= 1e-10);
      }
  };

  check_orthonormal(BlockCovariance::Identity(1, 2), 3);
  check_orthonormal(test::random_block_spd(gen, 2, 2), 6);
  check_orthonormal(test::random_block_spd(gen, 3, 2), 9);
  check_orthonormal(test::random_block_spd(gen, 1, 3), 6);
}

TEST_CASE("configurational coefficient vanishes on stationary states") {
  const NormalModes modes = rouse_modes({2, 2});
  const double De = 1.0;

  // equilibrium: identity covariance, no flow
  {
    const auto M_blocks = shear_deformation(modes.eigenvalues, De, 0.0, 2);
    const TangentCoefficient A = config_coefficient(
        M_blocks, BlockCovariance::Identity(2, 2), modes.eigenvalues, De);
    CHECK(A.max_abs() <= 1e-14);
  }

  // stationary state of a symmetric gradient
  {
    Eigen::MatrixXd grad(2, 2);
    grad << 0.15, 0.05, 0.05, -0.15;
    const BlockCovariance cov = stationary_state(grad, modes, De);
    std::vector<Eigen::MatrixXd> M_blocks;
    for (int n = 0; n < 2; ++n)
      M_blocks.push_back((modes.eigenvalues[n] / (2.0 * De)) *
                             Eigen::MatrixXd::Identity(2, 2) -
                         grad);
    const TangentCoefficient A = config_coefficient(M_blocks, cov, modes.eigenvalues, De);
    CHECK(A.max_abs() <= 1e-12);
  }
}

TEST_CASE("configurational coefficient matches the finite-difference oracle") {
  std::mt19937_64 gen(29);
  const NormalModes modes = rouse_modes({2, 2});
  const double De = 1.3;
  const TensorRule rule = tensor_rule(4, 6);

  for (int trial = 0; trial < 3; ++trial) {
    const BlockCovariance cov = test::random_block_spd(gen, 2, 2, 0.8, 2.0);
    const auto M_blocks = shear_deformation(modes.eigenvalues, De, 0.7, 2);
    const auto basis = tangent_basis(cov);

    const Eigen::VectorXd fd_coeffs = project_coefficients(
        [&](const Eigen::VectorXd& q) {
          return fd_configurational_action(M_blocks, modes.eigenvalues, De, cov, q);
        },
        basis, cov, rule);

    const TangentCoefficient A = config_coefficient(M_blocks, cov, modes.eigenvalues, De);
    for (std::size_t m = 0; m < basis.size(); ++m) {
      const double exact = fisher_inner(A, basis[m], cov);
      CHECK(std::abs(fd_coeffs[m] - exact) <= 1e-6);
    }
  }
}

TEST_CASE("pointwise configurational action matches the tangent form") {
  std::mt19937_64 gen(31);
  const NormalModes modes = rouse_modes({2, 2});
  const double De = 0.9;
  const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
  const auto M_blocks = shear_deformation(modes.eigenvalues, De, -0.4, 2);
  const TangentCoefficient A = config_coefficient(M_blocks, cov, modes.eigenvalues, De);
  const double shift = A.trace_product(cov);

  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd q = test::random_vector(gen, 4, 1.5);
    const double via_action = configurational_action(M_blocks, modes.eigenvalues, De, cov, q);
    const double via_coefficient = (A.quad_form(q) - shift) * density(cov, q);
    CHECK(via_action == doctest::Approx(via_coefficient).epsilon(1e-11));
  }
}

TEST_CASE("mass of the configurational action vanishes") {
  std::mt19937_64 gen(37);
  const NormalModes modes = rouse_modes({2, 2});
  const TensorRule rule = tensor_rule(4, 6);
  for (int trial = 0; trial < 10; ++trial) {
    const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
    const auto M_blocks =
        shear_deformation(modes.eigenvalues, 1.1, -1.0 + 0.2 * trial, 2);
    const double mass = integrate_gaussian(
        [&](const Eigen::VectorXd& q) {
          return configurational_action(M_blocks, modes.eigenvalues, 1.1, cov, q) /
                 density(cov, q);
        },
        cov, rule);
    CHECK(std::abs(mass) <= 1e-10);
  }
}

TEST_CASE("spatial coefficient covers advection and diffusion driving") {
  // spatially constant covariance: nothing to transport
  {
    SpatialDerivatives deriv = SpatialDerivatives::homogeneous(1, 2, 2);
    const TangentCoefficient A = spatial_coefficient(deriv, BlockCovariance::Identity(1, 2));
    CHECK(A.max_abs() == 0.0);
  }

  // C(x) = (1 + x_1) I near x = 0 advected with u = e_1 and eps = 0:
  // L_x C = I, so A_x = C⁻²/2 = I/2 at x = 0
  {
    SpatialDerivatives deriv;
    deriv.grad = {BlockDiag::Identity(1, 2), BlockDiag::Zero(1, 2)};
    deriv.advected = BlockDiag::Identity(1, 2);
    const TangentCoefficient A = spatial_coefficient(deriv, BlockCovariance::Identity(1, 2));
    CHECK((A - 0.5 * BlockDiag::Identity(1, 2)).max_abs() <= 1e-15);
  }

  // u = 0, eps > 0, C quadratic in x: A_x = -(eps/2) C⁻¹ (ΔC) C⁻¹
  {
    std::mt19937_64 gen(41);
    const double eps = 0.3;
    const BlockCovariance cov = test::random_block_spd(gen, 1, 2);
    const BlockDiag laplacian = test::random_block_symmetric(gen, 1, 2);
    SpatialDerivatives deriv;
    deriv.grad = {BlockDiag::Zero(1, 2), BlockDiag::Zero(1, 2)};
    deriv.advected = (-eps) * laplacian;
    const TangentCoefficient A = spatial_coefficient(deriv, cov);

    const Eigen::MatrixXd Cinv = cov.block(0).inverse();
    const Eigen::MatrixXd expected = -(eps / 2.0) * Cinv * laplacian.block(0) * Cinv;
    CHECK((A.block(0) - expected).cwiseAbs().maxCoeff() <= 1e-13);
  }

  // missing advected-diffused derivative is an error
  {
    SpatialDerivatives deriv;
    deriv.grad = {BlockDiag::Zero(1, 2), BlockDiag::Zero(1, 2)};
    CHECK_THROWS_AS(spatial_coefficient(deriv, BlockCovariance::Identity(1, 2)),
                    std::invalid_argument);
  }
}

TEST_CASE("remainder reduces to the scalar formula in one dimension") {
  SpatialDerivatives deriv;
  deriv.grad = {BlockDiag::Identity(1, 1)};
  const BlockCovariance cov = BlockCovariance::Identity(1, 1);

  for (double x : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    Eigen::VectorXd q(1);
    q << x;
    const double expected = x * x - 0.5 - 0.25 * (x * x - 1.0) * (x * x - 1.0);
    CHECK(remainder(deriv, cov, q) == doctest::Approx(expected).epsilon(1e-14));
  }

  // homogeneous covariance has no remainder
  SpatialDerivatives none = SpatialDerivatives::homogeneous(1, 1, 1);
  Eigen::VectorXd q(1);
  q << 0.7;
  CHECK(remainder(none, cov, q) == 0.0);
}

TEST_CASE("remainder has zero mean") {
  std::mt19937_64 gen(43);
  const TensorRule rule = tensor_rule(2, 6);
  for (int trial = 0; trial < 10; ++trial) {
    const BlockCovariance cov = test::random_block_spd(gen, 1, 2);
    SpatialDerivatives deriv;
    deriv.grad = {test::random_block_symmetric(gen, 1, 2),
                  test::random_block_symmetric(gen, 1, 2)};
    const RemainderEvaluator rho(deriv, cov);
    double mean = 0.0;
    for_each_gaussian_node(cov, rule,
                           [&](const Eigen::VectorXd& q, double w) { mean += w * rho(q); });
    CHECK(std::abs(mean) <= 1e-12);
  }
}

TEST_CASE("remainder is orthogonal to every degree-two polynomial") {
  std::mt19937_64 gen(47);

  // trivial when the covariance is homogeneous
  CHECK(check_remainder_orthogonality(SpatialDerivatives::homogeneous(1, 2, 2),
                                      BlockCovariance::Identity(1, 2),
                                      tensor_rule(2, 4)) == 0.0);

  for (const auto [N, d] : {std::pair{1, 2}, std::pair{2, 2}}) {
    const TensorRule rule = tensor_rule(N * d, 4);
    for (int trial = 0; trial < 5; ++trial) {
      const BlockCovariance cov = test::random_block_spd(gen, N, d);
      SpatialDerivatives deriv;
      for (int axis = 0; axis < d; ++axis)
        deriv.grad.push_back(test::random_block_symmetric(gen, N, d));
      CHECK(check_remainder_orthogonality(deriv, cov, rule) <= 1e-10);
    }
  }
}

TEST_CASE("projection recovers tangent functions") {
  std::mt19937_64 gen(53);
  const TensorRule rule = tensor_rule(4, 6);
  const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
  const TangentCoefficient A = test::random_block_symmetric(gen, 2, 2);
  const double shift = A.trace_product(cov);

  const TangentCoefficient recovered = project(
      [&](const Eigen::VectorXd& q) { return (A.quad_form(q) - shift) * density(cov, q); },
      cov, rule);
  CHECK((recovered - A).max_abs() <= 1e-10);
}

TEST_CASE("projection maps the configurational action to its coefficient") {
  std::mt19937_64 gen(59);
  const NormalModes modes = rouse_modes({2, 2});
  const double De = 1.4;
  const TensorRule rule = tensor_rule(4, 6);
  const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
  const auto M_blocks = shear_deformation(modes.eigenvalues, De, 0.5, 2);

  const TangentCoefficient projected = project(
      [&](const Eigen::VectorXd& q) {
        return configurational_action(M_blocks, modes.eigenvalues, De, cov, q);
      },
      cov, rule);
  const TangentCoefficient direct = config_coefficient(M_blocks, cov, modes.eigenvalues, De);
  CHECK((projected - direct).max_abs() <= 1e-9);
}

TEST_CASE("projection annihilates the remainder") {
  std::mt19937_64 gen(61);
  const TensorRule rule = tensor_rule(2, 6);
  const BlockCovariance cov = test::random_block_spd(gen, 1, 2);
  SpatialDerivatives deriv;
  deriv.grad = {test::random_block_symmetric(gen, 1, 2),
                test::random_block_symmetric(gen, 1, 2)};
  const RemainderEvaluator rho(deriv, cov);

  const auto basis = tangent_basis(cov);
  const Eigen::VectorXd coeffs = project_coefficients(
      [&](const Eigen::VectorXd& q) { return rho(q) * density(cov, q); }, basis, cov, rule);
  CHECK(coeffs.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("projection is idempotent in the weighted inner product") {
  std::mt19937_64 gen(67);
  const TensorRule rule = tensor_rule(2, 6);
  const BlockCovariance cov = test::random_block_spd(gen, 1, 2);
  const auto basis = tangent_basis(cov);

  // a non-tangent target: degree-four polynomial times the density
  const Eigen::MatrixXd S = test::random_symmetric(gen, 2);
  const auto phi = [&](const Eigen::VectorXd& q) {
    const double s = q.dot(S * q);
    return (s * s + 0.3 * s - 1.0) * density(cov, q);
  };

  const Eigen::VectorXd first = project_coefficients(phi, basis, cov, rule);
  std::vector<double> traces(basis.size());
  for (std::size_t m = 0; m < basis.size(); ++m) traces[m] = basis[m].trace_product(cov);
  const auto projected = [&](const Eigen::VectorXd& q) {
    double value = 0.0;
    for (std::size_t m = 0; m < basis.size(); ++m)
      value += first[m] * (basis[m].quad_form(q) - traces[m]);
    return value * density(cov, q);
  };
  const Eigen::VectorXd second = project_coefficients(projected, basis, cov, rule);
  CHECK((first - second).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("residual vanishes when the closure equations of motion hold") {
  const NormalModes modes = rouse_modes({2, 2});
  const double De = 1.0;
  const TensorRule rule = tensor_rule(4, 6);

  // equilibrium: everything at rest
  {
    const BlockCovariance cov = BlockCovariance::Identity(2, 2);
    const auto M_blocks = shear_deformation(modes.eigenvalues, De, 0.0, 2);
    const SpatialDerivatives deriv = SpatialDerivatives::homogeneous(2, 2, 2);
    const double value = residual_norm_sq(cov, BlockDiag::Zero(2, 2), M_blocks,
                                          modes.eigenvalues, deriv, De, 0.0, rule);
    CHECK(std::abs(value) <= 1e-14);
  }

  // eps = 0 with the covariance velocity from the equations of motion
  {
    std::mt19937_64 gen(71);
    const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
    const auto M_blocks = shear_deformation(modes.eigenvalues, De, 0.8, 2);
    const SpatialDerivatives deriv = SpatialDerivatives::homogeneous(2, 2, 2);

    BlockDiag cov_dot = BlockDiag::Zero(2, 2);
    for (int n = 0; n < 2; ++n)
      cov_dot.block(n) =
          (modes.eigenvalues[n] / De) * Eigen::MatrixXd::Identity(2, 2) -
          M_blocks[n] * cov.block(n) - cov.block(n) * M_blocks[n].transpose();

    const double value = residual_norm_sq(cov, cov_dot, M_blocks, modes.eigenvalues, deriv,
                                          De, 0.0, rule);
    CHECK(std::abs(value) <= 1e-10);
  }
}

TEST_CASE("residual equals eps^2 times the remainder mass for spatial fields") {
  std::mt19937_64 gen(73);
  const NormalModes modes = rouse_modes({1, 2});
  const double De = 1.2, eps = 0.2;
  const TensorRule rule = tensor_rule(2, 6);

  const BlockCovariance cov = test::random_block_spd(gen, 1, 2, 1.0, 2.0);
  SpatialDerivatives deriv;
  deriv.grad = {test::random_block_symmetric(gen, 1, 2, 0.4),
                test::random_block_symmetric(gen, 1, 2, 0.4)};
  const BlockDiag laplacian = test::random_block_symmetric(gen, 1, 2, 0.4);
  Eigen::VectorXd u(2);
  u << 0.4, -0.2;
  BlockDiag advected = u[0] * deriv.grad[0] + u[1] * deriv.grad[1];
  advected -= eps * laplacian;
  deriv.advected = advected;

  const auto M_blocks = shear_deformation(modes.eigenvalues, De, 0.6, 2);
  BlockDiag cov_dot = BlockDiag::Zero(1, 2);
  cov_dot.block(0) = -advected.block(0) +
                     (modes.eigenvalues[0] / De) * Eigen::MatrixXd::Identity(2, 2) -
                     M_blocks[0] * cov.block(0) - cov.block(0) * M_blocks[0].transpose();

  const double residual = residual_norm_sq(cov, cov_dot, M_blocks, modes.eigenvalues, deriv,
                                           De, eps, rule);

  const RemainderEvaluator rho(deriv, cov);
  double rho_sq = 0.0;
  for_each_gaussian_node(cov, rule, [&](const Eigen::VectorXd& q, double w) {
    rho_sq += w * rho(q) * rho(q);
  });
  CHECK(residual == doctest::Approx(eps * eps * rho_sq).epsilon(1e-9));
}
