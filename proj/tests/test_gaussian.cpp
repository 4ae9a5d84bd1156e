#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "polyfp/gaussian.hpp"
#include "polyfp/quadrature.hpp"
#include "test_util.hpp"

using namespace polyfp;

TEST_CASE("density matches the closed form at reference points") {
  // standard normal at the origin
  for (int D : {1, 2, 4}) {
    const BlockCovariance eye = BlockCovariance::Identity(D, 1);
    const double value = density(eye, Eigen::VectorXd::Zero(D));
    CHECK(value == doctest::Approx(std::pow(2.0 * std::numbers::pi, -0.5 * D)).epsilon(1e-14));
  }

  // scalar block with variance 4 evaluated at q = 2
  const BlockCovariance cov{std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Constant(1, 1, 4.0)}};
  Eigen::VectorXd q(1);
  q << 2.0;
  CHECK(density(cov, q) ==
        doctest::Approx(std::exp(-0.5) / std::sqrt(8.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("log density is the logarithm of the density") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
    const Eigen::VectorXd q = test::random_vector(gen, 4, 1.5);
    CHECK(log_density(cov, q) == doctest::Approx(std::log(density(cov, q))).epsilon(1e-12));
  }
}

TEST_CASE("quadrature mass of random states is one") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int N = 1 + (trial % 2);
    const int d = 1 + (trial % 3);
    const BlockCovariance cov = test::random_block_spd(gen, N, d);
    const TensorRule rule = tensor_rule(N * d, 6);
    double mass = 0.0;
    for_each_gaussian_node(cov, rule,
                           [&](const Eigen::VectorXd&, double w) { mass += w; });
    CHECK(std::abs(mass - 1.0) <= 1e-10);

    // the same mass through the density itself
    const double mass_via_density = integrate_gaussian(
        [&](const Eigen::VectorXd& q) { return density(cov, q) / density(cov, q); }, cov, rule);
    CHECK(std::abs(mass_via_density - 1.0) <= 1e-10);
  }
}

TEST_CASE("second moments reproduce the covariance blocks") {
  std::mt19937_64 gen(6);
  const int N = 2, d = 2;
  const TensorRule rule = tensor_rule(N * d, 6);
  for (int trial = 0; trial < 10; ++trial) {
    const BlockCovariance cov = test::random_block_spd(gen, N, d);
    const Eigen::MatrixXd dense = cov.dense();
    for (int i = 0; i < N * d; ++i)
      for (int j = 0; j < N * d; ++j) {
        const double moment = integrate_gaussian(
            [&](const Eigen::VectorXd& q) { return q[i] * q[j]; }, cov, rule);
        CHECK(std::abs(moment - dense(i, j)) <= 1e-11);
      }
  }
}

TEST_CASE("conformation and extra stress sum the blocks") {
  const BlockCovariance eye = BlockCovariance::Identity(3, 2);
  CHECK(extra_stress(eye).cwiseAbs().maxCoeff() == 0.0);

  std::vector<Eigen::MatrixXd> blocks{2.0 * Eigen::MatrixXd::Identity(2, 2),
                                      Eigen::MatrixXd::Identity(2, 2)};
  const BlockCovariance cov{blocks};
  CHECK((conformation(cov) - 3.0 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((extra_stress(cov) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stationary covariance solves the zero-flow and diagonal cases") {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd at_rest = stationary_covariance(zero, 1.7, 0.8);
  CHECK((at_rest - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);

  Eigen::MatrixXd grad(2, 2);
  grad << 0.1, 0.0, 0.0, -0.1;
  const Eigen::MatrixXd cov = stationary_covariance(grad, 1.0, 1.0);
  CHECK(cov(0, 0) == doctest::Approx(1.25).epsilon(1e-13));
  CHECK(cov(1, 1) == doctest::Approx(1.0 / 1.2).epsilon(1e-13));
  CHECK(std::abs(cov(0, 1)) <= 1e-14);
}

TEST_CASE("stationary covariance annihilates the conformation equation right side") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd grad = test::random_symmetric(gen, 2, 0.2);
    const double lambda = 1.0 + trial * 0.2;
    const double De = 0.9;
    const Eigen::MatrixXd C = stationary_covariance(grad, lambda, De);
    const Eigen::MatrixXd M =
        (lambda / (2.0 * De)) * Eigen::MatrixXd::Identity(2, 2) - grad;
    const Eigen::MatrixXd residual =
        (lambda / De) * Eigen::MatrixXd::Identity(2, 2) - M * C - C * M.transpose();
    CHECK(residual.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("stationary state at rest carries zero extra stress") {
  const NormalModes modes = rouse_modes({3, 2});
  const BlockCovariance cov = stationary_state(Eigen::MatrixXd::Zero(2, 2), modes, 1.0);
  CHECK(extra_stress(cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flow too strong for a stationary state is rejected") {
  Eigen::MatrixXd strong(2, 2);
  strong << 0.6, 0.0, 0.0, -0.6;  // exceeds lambda/(2 De) = 0.5
  CHECK_THROWS_AS(stationary_covariance(strong, 1.0, 1.0), std::domain_error);
}

TEST_CASE("asymmetric velocity gradients are reported, not symmetrized") {
  Eigen::MatrixXd shear(2, 2);
  shear << 0.0, 0.1, 0.0, 0.0;
  CHECK_THROWS_AS(stationary_covariance(shear, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("degenerate covariances are rejected") {
  Eigen::MatrixXd degenerate(2, 2);
  degenerate << 1.0, 0.0, 0.0, 1e-13;
  const BlockCovariance cov{std::vector<Eigen::MatrixXd>{degenerate}};
  CHECK_THROWS_AS(check_covariance(cov), std::domain_error);
  CHECK(!is_valid_covariance(cov));

  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 1e-9, 0.0, 1.0;
  CHECK(!is_valid_covariance(BlockCovariance{std::vector<Eigen::MatrixXd>{asym}}));
}

TEST_CASE("cross-block second moments vanish") {
  std::mt19937_64 gen(9);
  const BlockCovariance cov = test::random_block_spd(gen, 2, 2);
  const TensorRule rule = tensor_rule(4, 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 2; j < 4; ++j) {
      const double moment = integrate_gaussian(
          [&](const Eigen::VectorXd& q) { return q[i] * q[j]; }, cov, rule);
      CHECK(std::abs(moment) <= 1e-11);
    }
}
