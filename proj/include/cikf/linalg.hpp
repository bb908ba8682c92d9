#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cikf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Moore-Penrose pseudo-inverse through an SVD. Singular values below
/// `rel_tol * sigma_max` are treated as zero.
Matrix pinv(const Matrix& m, double rel_tol = 1e-12);

/// Pseudo-inverse of a symmetric matrix through its eigendecomposition.
Matrix pinv_symmetric(const Matrix& m, double rel_tol = 1e-12);

struct RightSolve {
  Matrix gain;          // cross * pinv(cov)
  Index rank = 0;       // numerical rank of cov
  bool truncated = false;  // some eigen-directions were discarded
};

/// Computes `cross * cov^+` for a symmetric positive-semidefinite `cov`,
/// discarding eigen-directions below `rel_cutoff * lambda_max`.
RightSolve solve_right_psd(const Matrix& cross, const Matrix& cov, double rel_cutoff);

double spectral_radius(const Matrix& m);
double spectral_norm(const Matrix& m);

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Returns F with F * F^T == cov. Negative eigenvalues down to
/// -clip_tol * max(1, lambda_max) are clipped to zero; anything more negative
/// throws ModelError.
Matrix psd_factor(const Matrix& cov, double clip_tol = 1e-12);

/// Smallest eigenvalue of the symmetric part of `m`.
double min_symmetric_eigenvalue(const Matrix& m);

/// Deterministic 64-bit engine for (seed, stream) pairs.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Block-diagonal matrix with (possibly rectangular) blocks.
class BlockDiag {
 public:
  BlockDiag() = default;
  explicit BlockDiag(std::vector<Matrix> blocks);
  /// N copies of the same block, i.e. I_N (x) block.
  static BlockDiag repeat(const Matrix& block, int count);

  int count() const { return static_cast<int>(blocks_.size()); }
  const Matrix& block(int n) const { return blocks_[n]; }
  Matrix& block(int n) { return blocks_[n]; }
  const std::vector<Matrix>& blocks() const { return blocks_; }

  Index rows() const;
  Index cols() const;
  Index row_offset(int n) const { return row_off_[n]; }
  Index col_offset(int n) const { return col_off_[n]; }

  Matrix dense() const;
  BlockDiag transpose() const;

  /// this * x
  Matrix left_multiply(const Matrix& x) const;
  /// x * this
  Matrix right_multiply(const Matrix& x) const;
  /// x * this^T
  Matrix right_multiply_transpose(const Matrix& x) const;
  Vector apply(const Vector& v) const;

 private:
  void index();

  std::vector<Matrix> blocks_;
  std::vector<Index> row_off_;
  std::vector<Index> col_off_;
};

/// this * other for two conformal block-diagonal matrices.
BlockDiag operator*(const BlockDiag& a, const BlockDiag& b);

/// Square block-sparse matrix with uniform block size; block row n stores
/// (column block, value) pairs.
class BlockSparse {
 public:
  struct Entry {
    int col;
    Matrix value;
  };

  BlockSparse() = default;
  BlockSparse(int block_count, Index block_size);

  static BlockSparse identity(int block_count, Index block_size);

  int block_count() const { return static_cast<int>(rows_.size()); }
  Index block_size() const { return block_size_; }
  Index size() const { return block_size_ * block_count(); }

  const std::vector<Entry>& row(int n) const { return rows_[n]; }
  /// Adds `value` into block (n, l), creating the block if absent.
  void add(int n, int l, const Matrix& value);
  /// Block (n, l) or a zero matrix.
  Matrix get(int n, int l) const;

  Matrix dense() const;
  BlockSparse& operator-=(const BlockSparse& other);

  /// this * x
  Matrix left_multiply(const Matrix& x) const;
  /// x * this^T
  Matrix right_multiply_transpose(const Matrix& x) const;
  Vector apply(const Vector& v) const;

 private:
  Index block_size_ = 0;
  std::vector<std::vector<Entry>> rows_;
};

/// Square block-diagonal as a block-sparse matrix.
BlockSparse to_block_sparse(const BlockDiag& d);

/// Adds `block` to every (n, l) block of `out`, i.e. out += (1 1^T) (x) block.
void add_to_all_blocks(Matrix& out, const Matrix& block);

/// Stacks `count` copies of v.
Vector repeat(const Vector& v, int count);

}  // namespace cikf
