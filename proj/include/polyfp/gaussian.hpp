#pragma once

#include <Eigen/Dense>

#include "polyfp/block_diag.hpp"
#include "polyfp/chain.hpp"

namespace polyfp {

/// Block-diagonal SPD covariance C = diag(C_1..C_N), one d×d block per
/// normal mode. This is the state of the Gaussian approximation family
/// and carries the conformation tensor.
using BlockCovariance = BlockDiag;

/// Symmetry and positive-definiteness check for a covariance state.
/// Blocks must be symmetric within 1e-12 and have
/// min eigenvalue > 1e-12 · max eigenvalue. Throws otherwise.
void check_covariance(const BlockCovariance& cov);

/// Non-throwing variant of check_covariance.
bool is_valid_covariance(const BlockCovariance& cov);

/// Mean-zero Gaussian density ∏_n exp(-½ q_nᵀ C_n⁻¹ q_n)/√((2π)^d det C_n).
double log_density(const BlockCovariance& cov, const Eigen::VectorXd& q);
double density(const BlockCovariance& cov, const Eigen::VectorXd& q);

/// Conformation tensor Σ_n C_n of the Gaussian state.
Eigen::MatrixXd conformation(const BlockCovariance& cov);

/// Kramer's extra stress τ = Σ_n (C_n - I_d) = conformation - N·I_d.
Eigen::MatrixXd extra_stress(const BlockCovariance& cov);

/// Covariance block C_n = (λ_n / 2De) M_n⁻¹ of the stationary Gaussian for a
/// constant symmetric velocity gradient, with M_n = λ_n/(2De) I - ∇u.
/// Throws if ∇u is asymmetric beyond 1e-10 or if M_n fails to be positive
/// definite (flow too strong for a stationary state).
Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& grad_u, double lambda, double De);

/// All N blocks of the stationary state at once.
BlockCovariance stationary_state(const Eigen::MatrixXd& grad_u, const NormalModes& modes,
                                 double De);

}  // namespace polyfp
