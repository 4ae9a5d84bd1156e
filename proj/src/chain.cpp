#include "polyfp/chain.hpp"

#include <cmath>
#include <stdexcept>

namespace polyfp {

namespace {

constexpr double kSymmetryTol = 1e-12;

Eigen::VectorXd kron_apply(const Eigen::MatrixXd& Q, const Eigen::VectorXd& v, int d) {
  const int N = static_cast<int>(Q.rows());
  if (d < 1 || v.size() != static_cast<Eigen::Index>(N) * d)
    throw std::invalid_argument("coordinate vector length must equal N*d");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < N; ++m) out.segment(n * d, d) += Q(n, m) * v.segment(m * d, d);
  return out;
}

}  // namespace

Eigen::MatrixXd rouse_matrix(const ChainSpec& spec) {
  if (spec.n_springs < 1) throw std::invalid_argument("chain needs at least one spring");
  const int N = spec.n_springs;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    R(i, i) = 2.0;
    if (i + 1 < N) {
      R(i, i + 1) = -1.0;
      R(i + 1, i) = -1.0;
    }
  }
  return R;
}

NormalModes normal_modes(const Eigen::MatrixXd& connectivity) {
  if (connectivity.rows() != connectivity.cols())
    throw std::invalid_argument("connectivity matrix must be square");
  const double defect = (connectivity - connectivity.transpose()).cwiseAbs().maxCoeff();
  if (defect > kSymmetryTol)
    throw std::invalid_argument("connectivity matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(connectivity);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed to converge");

  Eigen::MatrixXd vectors = solver.eigenvectors();  // columns, eigenvalues ascending
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      if (std::abs(vectors(i, k)) > 1e-12) {
        if (vectors(i, k) < 0.0) vectors.col(k) *= -1.0;
        break;
      }
    }
  }

  NormalModes modes;
  modes.eigenvalues = solver.eigenvalues();
  modes.modal_matrix = vectors.transpose();  // R = Qᵀ Λ Q
  return modes;
}

NormalModes rouse_modes(const ChainSpec& spec) { return normal_modes(rouse_matrix(spec)); }

Eigen::VectorXd to_normal_coords(const Eigen::VectorXd& q_hat, const NormalModes& modes,
                                 int space_dim) {
  return kron_apply(modes.modal_matrix, q_hat, space_dim);
}

Eigen::VectorXd from_normal_coords(const Eigen::VectorXd& q, const NormalModes& modes,
                                   int space_dim) {
  return kron_apply(modes.modal_matrix.transpose(), q, space_dim);
}

}  // namespace polyfp
