#include "polyfp/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace polyfp {

long TensorRule::node_count() const {
  long n = 1;
  for (int i = 0; i < dim; ++i) n *= axis.order;
  return n;
}

double hermite(int n, double x) {
  if (n < 0) throw std::invalid_argument("hermite: negative degree");
  // H_{k+1} = x H_k - k H_{k-1}
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

HermiteRule gauss_hermite(int order) {
  if (order < 1 || order > 64) throw std::invalid_argument("gauss_hermite: order must be in [1, 64]");

  // Jacobi matrix of the probabilists' Hermite recurrence: zero diagonal,
  // off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = b;
    jacobi(k, k - 1) = b;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite: eigenproblem failed to converge");

  HermiteRule rule;
  rule.order = order;
  rule.nodes = solver.eigenvalues();
  rule.weights.resize(order);

  double factorial = 1.0;  // (order-1)!
  for (int k = 2; k < order; ++k) factorial *= k;

  // H_m and H_{m-1} by the recurrence
  const auto evaluate = [order](double x, double& value, double& below) {
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < order; ++k) {
      const double next = x * cur - static_cast<double>(k) * prev;
      prev = cur;
      cur = next;
    }
    value = cur;
    below = prev;
  };

  for (int i = 0; i < order; ++i) {
    // Newton polish of the eigenvalue estimate; H'_m = m H_{m-1}
    double x = rule.nodes[i];
    double value, below;
    for (int iter = 0; iter < 4; ++iter) {
      evaluate(x, value, below);
      const double step = value / (order * below);
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    evaluate(x, value, below);
    rule.nodes[i] = x;
    rule.weights[i] = factorial / (order * below * below);
  }
  return rule;
}

TensorRule tensor_rule(int dim, int order) {
  if (dim < 1) throw std::invalid_argument("tensor_rule: dimension must be positive");
  return TensorRule{dim, gauss_hermite(order)};
}

namespace {

/// Odometer walk over the m^dim tensor grid; fn(r, w) with r the
/// standard-normal node and w the product weight.
void walk_nodes(const TensorRule& rule,
                const std::function<void(const Eigen::VectorXd&, double)>& fn) {
  const int dim = rule.dim;
  const int m = rule.axis.order;
  std::vector<int> idx(dim, 0);
  Eigen::VectorXd r(dim);
  for (int a = 0; a < dim; ++a) r[a] = rule.axis.nodes[0];

  while (true) {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) w *= rule.axis.weights[idx[a]];
    fn(r, w);

    int a = 0;
    for (; a < dim; ++a) {
      if (++idx[a] < m) {
        r[a] = rule.axis.nodes[idx[a]];
        break;
      }
      idx[a] = 0;
      r[a] = rule.axis.nodes[0];
    }
    if (a == dim) break;
  }
}

}  // namespace

void for_each_standard_node(const TensorRule& rule,
                            const std::function<void(const Eigen::VectorXd&, double)>& fn) {
  walk_nodes(rule, fn);
}

void for_each_gaussian_node(const BlockDiag& cov, const TensorRule& rule,
                            const std::function<void(const Eigen::VectorXd&, double)>& fn) {
  if (rule.dim != cov.dim())
    throw std::invalid_argument("for_each_gaussian_node: rule dimension mismatch");

  const int d = cov.block_dim();
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(cov.n_blocks());
  for (int n = 0; n < cov.n_blocks(); ++n) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov.block(n));
    if (llt.info() != Eigen::Success)
      throw std::domain_error("for_each_gaussian_node: covariance block not positive definite");
    factors.push_back(llt.matrixL());
  }

  Eigen::VectorXd q(cov.dim());
  walk_nodes(rule, [&](const Eigen::VectorXd& r, double w) {
    for (int n = 0; n < cov.n_blocks(); ++n)
      q.segment(n * d, d) = factors[n] * r.segment(n * d, d);
    fn(q, w);
  });
}

double integrate_gaussian(const std::function<double(const Eigen::VectorXd&)>& g,
                          const BlockDiag& cov, const TensorRule& rule) {
  double sum = 0.0;
  for_each_gaussian_node(cov, rule, [&](const Eigen::VectorXd& q, double w) { sum += w * g(q); });
  return sum;
}

double integrate_standard(const std::function<double(const Eigen::VectorXd&)>& g,
                          const TensorRule& rule) {
  double sum = 0.0;
  for_each_standard_node(rule, [&](const Eigen::VectorXd& r, double w) { sum += w * g(r); });
  return sum;
}

}  // namespace polyfp
