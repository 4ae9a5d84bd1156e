#include "polyfp/variational.hpp"

#include <cmath>
#include <stdexcept>

namespace polyfp {

namespace {

void check_blocks(const std::vector<Eigen::MatrixXd>& M_blocks, const BlockCovariance& cov) {
  if (static_cast<int>(M_blocks.size()) != cov.n_blocks())
    throw std::invalid_argument("block count mismatch");
  for (const auto& m : M_blocks)
    if (m.rows() != cov.block_dim() || m.cols() != cov.block_dim())
      throw std::invalid_argument("block size mismatch");
}

/// Canonical symmetric units of one d×d block: E_ii, then E_ij + E_ji for i<j,
/// ordered lexicographically by (i, j).
std::vector<Eigen::MatrixXd> symmetric_units(int d) {
  std::vector<Eigen::MatrixXd> units;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d);
      u(i, j) += 1.0;
      u(j, i) += (i == j) ? 0.0 : 1.0;
      units.push_back(u);
    }
  }
  return units;
}

}  // namespace

SpatialDerivatives SpatialDerivatives::homogeneous(int n_blocks, int block_dim, int space_dim) {
  SpatialDerivatives deriv;
  deriv.grad.assign(space_dim, BlockDiag::Zero(n_blocks, block_dim));
  deriv.advected = BlockDiag::Zero(n_blocks, block_dim);
  return deriv;
}

double fisher_inner(const TangentCoefficient& A, const TangentCoefficient& B,
                    const BlockCovariance& cov) {
  if (!A.same_shape(cov) || !B.same_shape(cov))
    throw std::invalid_argument("fisher_inner: shape mismatch");
  double s = 0.0;
  for (int n = 0; n < cov.n_blocks(); ++n) {
    const Eigen::MatrixXd& C = cov.block(n);
    s += 2.0 * (C * A.block(n) * C * B.block(n)).trace();
  }
  return s;
}

std::vector<TangentCoefficient> tangent_basis(const BlockCovariance& cov) {
  check_covariance(cov);
  const int N = cov.n_blocks();
  const int d = cov.block_dim();
  const auto units = symmetric_units(d);

  std::vector<TangentCoefficient> basis;
  basis.reserve(N * units.size());
  for (int n = 0; n < N; ++n) {
    for (const auto& u : units) {
      TangentCoefficient cand = BlockDiag::Zero(N, d);
      cand.block(n) = u;
      const double initial = fisher_inner(cand, cand, cov);
      for (const auto& prev : basis) {
        const double c = fisher_inner(cand, prev, cov);
        cand -= c * prev;
      }
      const double norm_sq = fisher_inner(cand, cand, cov);
      if (!(norm_sq > 1e-12 * initial))
        throw std::domain_error("tangent_basis: Gram pivot below tolerance");
      cand *= 1.0 / std::sqrt(norm_sq);
      basis.push_back(std::move(cand));
    }
  }
  return basis;
}

TangentCoefficient config_coefficient(const std::vector<Eigen::MatrixXd>& M_blocks,
                                      const BlockCovariance& cov, const Eigen::VectorXd& lambda,
                                      double De) {
  check_blocks(M_blocks, cov);
  if (lambda.size() != cov.n_blocks())
    throw std::invalid_argument("config_coefficient: eigenvalue count mismatch");
  check_covariance(cov);

  const int d = cov.block_dim();
  TangentCoefficient A = BlockDiag::Zero(cov.n_blocks(), d);
  for (int n = 0; n < cov.n_blocks(); ++n) {
    const Eigen::MatrixXd& C = cov.block(n);
    const Eigen::MatrixXd Cinv = C.inverse();
    const Eigen::MatrixXd inner = M_blocks[n] * C + C * M_blocks[n].transpose() -
                                  (lambda[n] / De) * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd block = 0.5 * Cinv * inner * Cinv;
    A.block(n) = 0.5 * (block + block.transpose());
  }
  return A;
}

TangentCoefficient spatial_coefficient(const SpatialDerivatives& deriv,
                                       const BlockCovariance& cov) {
  if (!deriv.advected)
    throw std::invalid_argument("spatial_coefficient: advected-diffused derivative missing");
  if (!deriv.advected->same_shape(cov))
    throw std::invalid_argument("spatial_coefficient: shape mismatch");
  check_covariance(cov);

  TangentCoefficient A = BlockDiag::Zero(cov.n_blocks(), cov.block_dim());
  for (int n = 0; n < cov.n_blocks(); ++n) {
    const Eigen::MatrixXd Cinv = cov.block(n).inverse();
    Eigen::MatrixXd block = 0.5 * Cinv * deriv.advected->block(n) * Cinv;
    A.block(n) = 0.5 * (block + block.transpose());
  }
  return A;
}

RemainderEvaluator::RemainderEvaluator(const SpatialDerivatives& deriv,
                                       const BlockCovariance& cov) {
  check_covariance(cov);
  const BlockDiag cov_inv = cov.inverse();
  for (const BlockDiag& dC : deriv.grad) {
    if (!dC.same_shape(cov)) throw std::invalid_argument("remainder: shape mismatch");
    const BlockDiag G = cov_inv.product(dC);  // C⁻¹ ∂_i C
    outer_.push_back(G.product(G).product(cov_inv));
    inner_.push_back(G.product(cov_inv));
    trace_sq_.push_back(G.product(G).trace());
    trace_.push_back(G.trace());
  }
}

double RemainderEvaluator::operator()(const Eigen::VectorXd& q) const {
  double value = 0.0;
  for (std::size_t i = 0; i < outer_.size(); ++i) {
    const double quad = inner_[i].quad_form(q) - trace_[i];
    value += outer_[i].quad_form(q) - 0.5 * trace_sq_[i] - 0.25 * quad * quad;
  }
  return value;
}

double remainder(const SpatialDerivatives& deriv, const BlockCovariance& cov,
                 const Eigen::VectorXd& q) {
  return RemainderEvaluator(deriv, cov)(q);
}

double check_remainder_orthogonality(const SpatialDerivatives& deriv, const BlockCovariance& cov,
                                     const TensorRule& rule) {
  const int D = cov.dim();
  const RemainderEvaluator rho(deriv, cov);
  double max_moment = 0.0;

  // moments against 1, q_i, and q_i q_j in one traversal
  const int n_pair = D * (D + 1) / 2;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(1 + D + n_pair);
  for_each_gaussian_node(cov, rule, [&](const Eigen::VectorXd& q, double w) {
    const double r = w * rho(q);
    acc[0] += r;
    int k = 1;
    for (int i = 0; i < D; ++i) acc[k++] += r * q[i];
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) acc[k++] += r * q[i] * q[j];
  });
  for (Eigen::Index k = 0; k < acc.size(); ++k) max_moment = std::max(max_moment, std::abs(acc[k]));
  return max_moment;
}

double configurational_action(const std::vector<Eigen::MatrixXd>& M_blocks,
                              const Eigen::VectorXd& lambda, double De,
                              const BlockCovariance& cov, const Eigen::VectorXd& q) {
  check_blocks(M_blocks, cov);
  const int d = cov.block_dim();
  const BlockDiag cov_inv = cov.inverse();
  const Eigen::VectorXd cinv_q = cov_inv.apply(q);

  // -div(M q f) - (1/2De) div((Λ⊗I) ∇f) with ∇f = -C⁻¹ q f
  double tr_M = 0.0;
  double drift_quad = 0.0;
  double tr_diff = 0.0;
  double diff_quad = 0.0;
  for (int n = 0; n < cov.n_blocks(); ++n) {
    tr_M += M_blocks[n].trace();
    const auto qn = q.segment(n * d, d);
    const auto cq = cinv_q.segment(n * d, d);
    drift_quad += (M_blocks[n] * qn).dot(cq);
    tr_diff += lambda[n] * cov_inv.block(n).trace();
    diff_quad += lambda[n] * cq.squaredNorm();
  }
  const double poly =
      -tr_M + drift_quad + (0.5 / De) * (tr_diff - diff_quad);
  return poly * density(cov, q);
}

Eigen::VectorXd project_coefficients(const std::function<double(const Eigen::VectorXd&)>& phi,
                                     const std::vector<TangentCoefficient>& basis,
                                     const BlockCovariance& cov, const TensorRule& rule) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis.size());
  std::vector<double> traces(basis.size());
  for (std::size_t m = 0; m < basis.size(); ++m) traces[m] = basis[m].trace_product(cov);

  for_each_gaussian_node(cov, rule, [&](const Eigen::VectorXd& q, double w) {
    const double ratio = phi(q) / density(cov, q);  // ∫ φ_m φ / f dq = E[poly_m · φ/f]
    for (std::size_t m = 0; m < basis.size(); ++m)
      coeffs[m] += w * (basis[m].quad_form(q) - traces[m]) * ratio;
  });
  return coeffs;
}

TangentCoefficient project(const std::function<double(const Eigen::VectorXd&)>& phi,
                           const BlockCovariance& cov, const TensorRule& rule) {
  const auto basis = tangent_basis(cov);
  const Eigen::VectorXd coeffs = project_coefficients(phi, basis, cov, rule);
  TangentCoefficient A = BlockDiag::Zero(cov.n_blocks(), cov.block_dim());
  for (std::size_t m = 0; m < basis.size(); ++m) A += coeffs[m] * basis[m];
  return A;
}

double residual_norm_sq(const BlockCovariance& cov, const BlockDiag& cov_dot,
                        const std::vector<Eigen::MatrixXd>& M_blocks,
                        const Eigen::VectorXd& lambda, const SpatialDerivatives& deriv,
                        double De, double eps, const TensorRule& rule) {
  if (!cov_dot.same_shape(cov)) throw std::invalid_argument("residual_norm_sq: shape mismatch");
  check_covariance(cov);

  // ∂t f has coefficient ½ C⁻¹ Ċ C⁻¹
  const BlockDiag cov_inv = cov.inverse();
  BlockDiag time_coeff = 0.5 * cov_inv.product(cov_dot).product(cov_inv);
  time_coeff.symmetrize();

  BlockDiag total = time_coeff;
  total += spatial_coefficient(deriv, cov);
  total += config_coefficient(M_blocks, cov, lambda, De);
  const double shift = total.trace_product(cov);

  const RemainderEvaluator rho(deriv, cov);
  double sum = 0.0;
  for_each_gaussian_node(cov, rule, [&](const Eigen::VectorXd& q, double w) {
    const double value = total.quad_form(q) - shift + eps * rho(q);
    sum += w * value * value;
  });
  return sum;
}

}  // namespace polyfp
