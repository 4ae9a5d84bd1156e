#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace polyfp {

/// Block-diagonal square matrix with N identically sized dense blocks.
/// Used both for covariances (SPD blocks) and for the symmetric
/// coefficient matrices of tangent vectors.
class BlockDiag {
 public:
  BlockDiag() = default;

  explicit BlockDiag(std::vector<Eigen::MatrixXd> blocks) : blocks_(std::move(blocks)) {
    for (const auto& b : blocks_) {
      if (b.rows() != b.cols() || b.rows() != blocks_.front().rows())
        throw std::invalid_argument("BlockDiag: blocks must be square and identically sized");
    }
  }

  static BlockDiag Identity(int n_blocks, int block_dim) {
    return filled(n_blocks, block_dim, Eigen::MatrixXd::Identity(block_dim, block_dim));
  }

  static BlockDiag Zero(int n_blocks, int block_dim) {
    return filled(n_blocks, block_dim, Eigen::MatrixXd::Zero(block_dim, block_dim));
  }

  int n_blocks() const { return static_cast<int>(blocks_.size()); }
  int block_dim() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_[0].rows()); }
  int dim() const { return n_blocks() * block_dim(); }

  Eigen::MatrixXd& block(int n) { return blocks_.at(n); }
  const Eigen::MatrixXd& block(int n) const { return blocks_.at(n); }
  const std::vector<Eigen::MatrixXd>& blocks() const { return blocks_; }

  bool same_shape(const BlockDiag& other) const {
    return n_blocks() == other.n_blocks() && block_dim() == other.block_dim();
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(dim(), dim());
    const int d = block_dim();
    for (int n = 0; n < n_blocks(); ++n) full.block(n * d, n * d, d, d) = blocks_[n];
    return full;
  }

  /// A q for a configuration vector q of length dim().
  Eigen::VectorXd apply(const Eigen::VectorXd& q) const {
    check_vector(q);
    Eigen::VectorXd out(q.size());
    const int d = block_dim();
    for (int n = 0; n < n_blocks(); ++n) out.segment(n * d, d) = blocks_[n] * q.segment(n * d, d);
    return out;
  }

  /// qᵀ A q
  double quad_form(const Eigen::VectorXd& q) const {
    check_vector(q);
    double s = 0.0;
    const int d = block_dim();
    for (int n = 0; n < n_blocks(); ++n) {
      const auto qn = q.segment(n * d, d);
      s += qn.dot(blocks_[n] * qn);
    }
    return s;
  }

  double trace() const {
    double s = 0.0;
    for (const auto& b : blocks_) s += b.trace();
    return s;
  }

  /// tr(A B)
  double trace_product(const BlockDiag& other) const {
    check_shape(other);
    double s = 0.0;
    for (int n = 0; n < n_blocks(); ++n) s += (blocks_[n] * other.blocks_[n]).trace();
    return s;
  }

  /// Blockwise matrix product A B.
  BlockDiag product(const BlockDiag& other) const {
    check_shape(other);
    BlockDiag out = *this;
    for (int n = 0; n < n_blocks(); ++n) out.blocks_[n] = blocks_[n] * other.blocks_[n];
    return out;
  }

  /// Blockwise dense inverse. Throws if any block is singular.
  BlockDiag inverse() const {
    BlockDiag out = *this;
    for (int n = 0; n < n_blocks(); ++n) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(blocks_[n]);
      if (!lu.isInvertible()) throw std::domain_error("BlockDiag: singular block");
      out.blocks_[n] = lu.inverse();
    }
    return out;
  }

  double max_asymmetry() const {
    double m = 0.0;
    for (const auto& b : blocks_) m = std::max(m, (b - b.transpose()).cwiseAbs().maxCoeff());
    return m;
  }

  void symmetrize() {
    for (auto& b : blocks_) b = 0.5 * (b + b.transpose()).eval();
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& b : blocks_) m = std::max(m, b.cwiseAbs().maxCoeff());
    return m;
  }

  BlockDiag& operator+=(const BlockDiag& other) {
    check_shape(other);
    for (int n = 0; n < n_blocks(); ++n) blocks_[n] += other.blocks_[n];
    return *this;
  }
  BlockDiag& operator-=(const BlockDiag& other) {
    check_shape(other);
    for (int n = 0; n < n_blocks(); ++n) blocks_[n] -= other.blocks_[n];
    return *this;
  }
  BlockDiag& operator*=(double a) {
    for (auto& b : blocks_) b *= a;
    return *this;
  }

  friend BlockDiag operator+(BlockDiag a, const BlockDiag& b) { return a += b; }
  friend BlockDiag operator-(BlockDiag a, const BlockDiag& b) { return a -= b; }
  friend BlockDiag operator*(double s, BlockDiag a) { return a *= s; }
  friend BlockDiag operator*(BlockDiag a, double s) { return a *= s; }

 private:
  static BlockDiag filled(int n_blocks, int block_dim, const Eigen::MatrixXd& value) {
    if (n_blocks < 1 || block_dim < 1)
      throw std::invalid_argument("BlockDiag: need at least one block of positive size");
    BlockDiag out;
    out.blocks_.assign(n_blocks, value);
    return out;
  }

  void check_shape(const BlockDiag& other) const {
    if (!same_shape(other)) throw std::invalid_argument("BlockDiag: shape mismatch");
  }

  void check_vector(const Eigen::VectorXd& q) const {
    if (q.size() != dim()) throw std::invalid_argument("BlockDiag: vector length mismatch");
  }

  std::vector<Eigen::MatrixXd> blocks_;
};

}  // namespace polyfp
