#include "polyfp/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polyfp {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kGradientSymmetryTol = 1e-10;

bool blocks_spd(const BlockCovariance& cov, double* defect_out = nullptr) {
  for (int n = 0; n < cov.n_blocks(); ++n) {
    const Eigen::MatrixXd& b = cov.block(n);
    const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
    if (defect_out) *defect_out = asym;
    if (asym > kSymmetryTol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    // relative floor separates genuine degeneracy from roundoff
    if (!(lo > 1e-12 * hi) || !(hi > 0.0)) return false;
  }
  return true;
}

}  // namespace

void check_covariance(const BlockCovariance& cov) {
  if (cov.n_blocks() < 1) throw std::invalid_argument("covariance has no blocks");
  if (!blocks_spd(cov)) throw std::domain_error("covariance block not symmetric positive definite");
}

bool is_valid_covariance(const BlockCovariance& cov) {
  return cov.n_blocks() >= 1 && blocks_spd(cov);
}

double log_density(const BlockCovariance& cov, const Eigen::VectorXd& q) {
  if (q.size() != cov.dim()) throw std::invalid_argument("log_density: vector length mismatch");
  const int d = cov.block_dim();
  double acc = 0.0;
  for (int n = 0; n < cov.n_blocks(); ++n) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov.block(n));
    if (llt.info() != Eigen::Success)
      throw std::domain_error("log_density: covariance block not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::VectorXd y = L.triangularView<Eigen::Lower>().solve(q.segment(n * d, d));
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(L(i, i));
    acc += -0.5 * y.squaredNorm() - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
  }
  return acc;
}

double density(const BlockCovariance& cov, const Eigen::VectorXd& q) {
  return std::exp(log_density(cov, q));
}

Eigen::MatrixXd conformation(const BlockCovariance& cov) {
  const int d = cov.block_dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (int n = 0; n < cov.n_blocks(); ++n) sum += cov.block(n);
  return sum;
}

Eigen::MatrixXd extra_stress(const BlockCovariance& cov) {
  const int d = cov.block_dim();
  return conformation(cov) - cov.n_blocks() * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& grad_u, double lambda, double De) {
  if (grad_u.rows() != grad_u.cols())
    throw std::invalid_argument("stationary_covariance: velocity gradient must be square");
  if (!(De > 0.0)) throw std::invalid_argument("stationary_covariance: De must be positive");
  const double asym = (grad_u - grad_u.transpose()).cwiseAbs().maxCoeff();
  if (asym > kGradientSymmetryTol)
    throw std::invalid_argument("stationary_covariance: velocity gradient must be symmetric");

  const int d = static_cast<int>(grad_u.rows());
  const Eigen::MatrixXd sym = 0.5 * (grad_u + grad_u.transpose());
  const Eigen::MatrixXd deformation =
      (lambda / (2.0 * De)) * Eigen::MatrixXd::Identity(d, d) - sym;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(deformation, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw std::domain_error("stationary_covariance: flow too strong, no stationary state");

  Eigen::MatrixXd block = (lambda / (2.0 * De)) * deformation.inverse();
  return 0.5 * (block + block.transpose());
}

BlockCovariance stationary_state(const Eigen::MatrixXd& grad_u, const NormalModes& modes,
                                 double De) {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(modes.eigenvalues.size());
  for (Eigen::Index n = 0; n < modes.eigenvalues.size(); ++n)
    blocks.push_back(stationary_covariance(grad_u, modes.eigenvalues[n], De));
  return BlockCovariance(std::move(blocks));
}

}  // namespace polyfp
