#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "polyfp/block_diag.hpp"
#include "polyfp/gaussian.hpp"
#include "polyfp/quadrature.hpp"

namespace polyfp {

/// Block-diagonal symmetric coefficient A of a tangent function
/// φ_A(q) = (qᵀ A q - tr(A C)) f(q) at the Gaussian state with covariance C.
using TangentCoefficient = BlockDiag;

/// Spatial derivatives of the covariance field at one position:
/// one block-diagonal symmetric ∂_{x_i} C per spatial axis, plus the
/// advected-diffused combination (u·∇)C - ε ΔC when available.
struct SpatialDerivatives {
  std::vector<BlockDiag> grad;       // size = spatial dimension d
  std::optional<BlockDiag> advected; // L_x C = (u·∇)C - ε ΔC

  static SpatialDerivatives homogeneous(int n_blocks, int block_dim, int space_dim);
};

/// 1/f-weighted inner product of two tangent functions,
/// ∫ φ_A φ_B / f dq = 2 tr(C A C B).
double fisher_inner(const TangentCoefficient& A, const TangentCoefficient& B,
                    const BlockCovariance& cov);

/// Orthonormal basis (w.r.t. fisher_inner) of the tangent space at cov:
/// M = N d(d+1)/2 coefficients, built by modified Gram-Schmidt over the
/// canonical symmetric block units in deterministic order.
std::vector<TangentCoefficient> tangent_basis(const BlockCovariance& cov);

/// Coefficient A_q of the configurational operator applied to the Gaussian,
/// A_q = ½ C⁻¹ (M C + C Mᵀ - (1/De) Λ⊗I_d) C⁻¹ blockwise.
TangentCoefficient config_coefficient(const std::vector<Eigen::MatrixXd>& M_blocks,
                                      const BlockCovariance& cov, const Eigen::VectorXd& lambda,
                                      double De);

/// Coefficient A_x = ½ C⁻¹ (L_x C) C⁻¹ of the tangential part of the
/// spatial operator. Requires deriv.advected.
TangentCoefficient spatial_coefficient(const SpatialDerivatives& deriv,
                                       const BlockCovariance& cov);

/// Scalar remainder ρ(q) of the spatial operator: the degree-4 polynomial
/// factor of the part of L_x f outside the tangent space,
///   ρ = Σ_i qᵀ(C⁻¹∂_iC)²C⁻¹q - ½ Σ_i tr((C⁻¹∂_iC)²)
///     - ¼ Σ_i [qᵀ C⁻¹∂_iC C⁻¹ q - tr(C⁻¹∂_iC)]².
double remainder(const SpatialDerivatives& deriv, const BlockCovariance& cov,
                 const Eigen::VectorXd& q);

/// Precomputed form of the remainder for repeated evaluation at quadrature
/// nodes of one state.
class RemainderEvaluator {
 public:
  RemainderEvaluator(const SpatialDerivatives& deriv, const BlockCovariance& cov);
  double operator()(const Eigen::VectorXd& q) const;

 private:
  std::vector<BlockDiag> outer_;   // (C⁻¹∂_iC)² C⁻¹
  std::vector<BlockDiag> inner_;   // C⁻¹∂_iC C⁻¹
  std::vector<double> trace_sq_;   // tr((C⁻¹∂_iC)²)
  std::vector<double> trace_;      // tr(C⁻¹∂_iC)
};

/// Max over test polynomials p ∈ {1, q_i, q_i q_j} of |∫ ρ p f dq|.
/// Vanishes (up to quadrature roundoff) for every Gaussian state.
double check_remainder_orthogonality(const SpatialDerivatives& deriv, const BlockCovariance& cov,
                                     const TensorRule& rule);

/// Pointwise value of the configurational operator applied to the Gaussian
/// density at q, evaluated from the divergence form (independent of
/// config_coefficient's sandwich formula).
double configurational_action(const std::vector<Eigen::MatrixXd>& M_blocks,
                              const Eigen::VectorXd& lambda, double De,
                              const BlockCovariance& cov, const Eigen::VectorXd& q);

/// 1/f-weighted orthogonal projection of an arbitrary function φ onto the
/// tangent space: returns the coefficient A with P_f φ = φ_A.
TangentCoefficient project(const std::function<double(const Eigen::VectorXd&)>& phi,
                           const BlockCovariance& cov, const TensorRule& rule);

/// Basis coefficients ∫ φ_m φ / f dq of φ in the orthonormal tangent basis.
Eigen::VectorXd project_coefficients(const std::function<double(const Eigen::VectorXd&)>& phi,
                                     const std::vector<TangentCoefficient>& basis,
                                     const BlockCovariance& cov, const TensorRule& rule);

/// Weighted squared residual ∫ (∂t f + L_x f + L_q f)² / f dq of the full
/// equation for a Gaussian state with covariance velocity cov_dot.
/// When cov_dot solves the closure equations of motion this reduces to
/// ε² ∫ ρ² f dq.
double residual_norm_sq(const BlockCovariance& cov, const BlockDiag& cov_dot,
                        const std::vector<Eigen::MatrixXd>& M_blocks,
                        const Eigen::VectorXd& lambda, const SpatialDerivatives& deriv,
                        double De, double eps, const TensorRule& rule);

}  // namespace polyfp
