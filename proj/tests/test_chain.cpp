#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "polyfp/chain.hpp"
#include "test_util.hpp"

using namespace polyfp;

TEST_CASE("rouse matrix is tridiag(-1, 2, -1)") {
  CHECK(rouse_matrix({1, 1})(0, 0) == 2.0);

  const Eigen::MatrixXd R = rouse_matrix({3, 2});
  Eigen::MatrixXd expected(3, 3);
  expected << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  CHECK((R - expected).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(rouse_matrix({0, 2}), std::invalid_argument);
}

TEST_CASE("two-spring chain has eigenvalues 1 and 3") {
  const NormalModes modes = rouse_modes({2, 2});
  CHECK(modes.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(modes.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("normal modes reconstruct the input matrix") {
  for (int N : {1, 2, 5, 16}) {
    const Eigen::MatrixXd R = rouse_matrix({N, 3});
    const NormalModes modes = normal_modes(R);
    const Eigen::MatrixXd QtLQ = modes.modal_matrix.transpose() *
                                 modes.eigenvalues.asDiagonal() * modes.modal_matrix;
    CHECK((QtLQ - R).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::MatrixXd QQt = modes.modal_matrix * modes.modal_matrix.transpose();
    CHECK((QQt - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(modes.eigenvalues.minCoeff() > 0.0);
  }
}

TEST_CASE("chain spectrum matches the closed form 4 sin^2(n pi / (2(N+1)))") {
  for (int N = 1; N <= 16; ++N) {
    const NormalModes modes = rouse_modes({N, 1});
    for (int n = 1; n <= N; ++n) {
      const double angle = n * std::numbers::pi / (2.0 * (N + 1));
      const double expected = 4.0 * std::sin(angle) * std::sin(angle);
      CHECK(modes.eigenvalues[n - 1] == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("identity connectivity keeps unit eigenvalues and an orthogonal Q") {
  const NormalModes modes = normal_modes(Eigen::MatrixXd::Identity(4, 4));
  for (int n = 0; n < 4; ++n) CHECK(modes.eigenvalues[n] == doctest::Approx(1.0));
  const Eigen::MatrixXd QQt = modes.modal_matrix * modes.modal_matrix.transpose();
  CHECK((QQt - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("asymmetric connectivity is rejected") {
  Eigen::MatrixXd bad(2, 2);
  bad << 2, -1, -1 + 1e-6, 2;
  CHECK_THROWS_AS(normal_modes(bad), std::invalid_argument);
}

TEST_CASE("single-spring transform is the identity") {
  const NormalModes modes = rouse_modes({1, 3});
  CHECK(std::abs(std::abs(modes.modal_matrix(0, 0)) - 1.0) <= 1e-15);
  Eigen::VectorXd q(3);
  q << 0.3, -0.5, 1.0;
  CHECK((to_normal_coords(q, modes, 3) - q).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("coordinate change round-trips and preserves the norm") {
  std::mt19937_64 gen(42);
  const NormalModes modes = rouse_modes({2, 2});
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd q_hat = test::random_vector(gen, 4);
    const Eigen::VectorXd q = to_normal_coords(q_hat, modes, 2);
    CHECK(q.norm() == doctest::Approx(q_hat.norm()).epsilon(1e-12));
    CHECK((from_normal_coords(q, modes, 2) - q_hat).cwiseAbs().maxCoeff() <= 1e-13);
  }

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  CHECK(to_normal_coords(zero, modes, 2).norm() == 0.0);
}

TEST_CASE("coordinate change preserves inner products") {
  std::mt19937_64 gen(7);
  for (int N : {2, 4}) {
    const NormalModes modes = rouse_modes({N, 2});
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd a = test::random_vector(gen, 2 * N);
      const Eigen::VectorXd b = test::random_vector(gen, 2 * N);
      const double before = a.dot(b);
      const double after = to_normal_coords(a, modes, 2).dot(to_normal_coords(b, modes, 2));
      CHECK(after == doctest::Approx(before).epsilon(1e-12));
    }
  }
}

TEST_CASE("length mismatch is rejected") {
  const NormalModes modes = rouse_modes({2, 2});
  CHECK_THROWS_AS(to_normal_coords(Eigen::VectorXd::Zero(3), modes, 2), std::invalid_argument);
  CHECK_THROWS_AS(from_normal_coords(Eigen::VectorXd::Zero(5), modes, 2), std::invalid_argument);
}
