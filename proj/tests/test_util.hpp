#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "polyfp/block_diag.hpp"

namespace polyfp::test {

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& gen, int d, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = normal(gen);
  return scale * 0.5 * (g + g.transpose());
}

/// SPD matrix with eigenvalues uniform in [lo, hi] and a random orientation.
inline Eigen::MatrixXd random_spd(std::mt19937_64& gen, int d, double lo = 0.5,
                                  double hi = 2.5) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = normal(gen);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::VectorXd eigs(d);
  for (int i = 0; i < d; ++i) eigs[i] = unif(gen);
  Eigen::MatrixXd spd = q * eigs.asDiagonal() * q.transpose();
  return 0.5 * (spd + spd.transpose());
}

inline BlockDiag random_block_spd(std::mt19937_64& gen, int n_blocks, int d, double lo = 0.5,
                                  double hi = 2.5) {
  std::vector<Eigen::MatrixXd> blocks;
  for (int n = 0; n < n_blocks; ++n) blocks.push_back(random_spd(gen, d, lo, hi));
  return BlockDiag(std::move(blocks));
}

inline BlockDiag random_block_symmetric(std::mt19937_64& gen, int n_blocks, int d,
                                        double scale = 1.0) {
  std::vector<Eigen::MatrixXd> blocks;
  for (int n = 0; n < n_blocks; ++n) blocks.push_back(random_symmetric(gen, d, scale));
  return BlockDiag(std::move(blocks));
}

inline Eigen::VectorXd random_vector(std::mt19937_64& gen, int size, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = scale * normal(gen);
  return v;
}

}  // namespace polyfp::test
