#pragma once

#include <Eigen/Dense>

namespace polyfp {

/// A linear chain of N identical Hookean springs in d spatial dimensions.
struct ChainSpec {
  int n_springs = 1;  // N
  int space_dim = 2;  // d

  int config_dim() const { return n_springs * space_dim; }  // D = N d
};

/// Spectral decomposition of the chain connectivity matrix, R = Qᵀ Λ Q.
struct NormalModes {
  Eigen::VectorXd eigenvalues;   // λ_1..λ_N, ascending, all positive for SPD input
  Eigen::MatrixXd modal_matrix;  // Q, orthogonal
};

/// Connectivity matrix of the linear chain: tridiag(-1, 2, -1).
Eigen::MatrixXd rouse_matrix(const ChainSpec& spec);

/// Diagonalize a symmetric connectivity matrix. Eigenvalues come out
/// ascending; each eigenvector is sign-fixed so its first nonzero entry
/// is positive, making Q reproducible across runs.
NormalModes normal_modes(const Eigen::MatrixXd& connectivity);

/// Convenience: modes of the linear chain itself.
NormalModes rouse_modes(const ChainSpec& spec);

/// q = (Q ⊗ I_d) q̂ : physical spring vectors to decoupled normal coordinates.
Eigen::VectorXd to_normal_coords(const Eigen::VectorXd& q_hat, const NormalModes& modes,
                                 int space_dim);

/// q̂ = (Qᵀ ⊗ I_d) q : inverse of to_normal_coords.
Eigen::VectorXd from_normal_coords(const Eigen::VectorXd& q, const NormalModes& modes,
                                   int space_dim);

}  // namespace polyfp
