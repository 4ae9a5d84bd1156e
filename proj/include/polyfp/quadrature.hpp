#pragma once

#include <Eigen/Dense>

#include <functional>

#include "polyfp/block_diag.hpp"

namespace polyfp {

/// One-dimensional Gauss-Hermite rule for the standard normal weight
/// (probabilists' convention). Weights sum to one, so constants
/// integrate to 1; an m-point rule is exact for polynomials of degree
/// up to 2m-1.
struct HermiteRule {
  int order = 0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Tensorization of one axis rule over all configuration axes.
struct TensorRule {
  int dim = 0;
  HermiteRule axis;

  long node_count() const;
};

/// Probabilists' Hermite polynomial H_n(x); H_2(x) = x^2-1, H_4(x) = x^4-6x^2+3.
double hermite(int n, double x);

/// Nodes and weights via the Golub-Welsch eigenproblem of the Jacobi matrix.
/// Orders 1..64 supported.
HermiteRule gauss_hermite(int order);

TensorRule tensor_rule(int dim, int order);

/// Visit every node of the tensor rule mapped through q = L r with
/// L Lᵀ = C (blockwise Cholesky), together with its weight.
/// This realizes E_{q~N(0,C)}[g(q)] as a weighted sum over nodes.
void for_each_gaussian_node(const BlockDiag& cov, const TensorRule& rule,
                            const std::function<void(const Eigen::VectorXd&, double)>& fn);

/// Same traversal for the standard normal N(0, I_dim).
void for_each_standard_node(const TensorRule& rule,
                            const std::function<void(const Eigen::VectorXd&, double)>& fn);

/// ∫ g(q) Φ(C, q) dq, exact for polynomial g of total degree ≤ 2·order-1.
double integrate_gaussian(const std::function<double(const Eigen::VectorXd&)>& g,
                          const BlockDiag& cov, const TensorRule& rule);

double integrate_standard(const std::function<double(const Eigen::VectorXd&)>& g,
                          const TensorRule& rule);

}  // namespace polyfp
