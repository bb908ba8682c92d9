#include "cikf/linalg.hpp"

#include "cikf/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cikf {

Matrix pinv(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Index k = 0; k < s.size(); ++k) {
    if (s(k) > cutoff && s(k) > 0.0) inv(k) = 1.0 / s(k);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix pinv_symmetric(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
  const Vector& w = es.eigenvalues();
  const double scale = w.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(w.size());
  for (Index k = 0; k < w.size(); ++k) {
    if (std::abs(w(k)) > rel_tol * scale && w(k) != 0.0) inv(k) = 1.0 / w(k);
  }
  const Matrix& q = es.eigenvectors();
  return symmetrized(q * inv.asDiagonal() * q.transpose());
}

RightSolve solve_right_psd(const Matrix& cross, const Matrix& cov, double rel_cutoff) {
  RightSolve out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(cov));
  const Vector& w = es.eigenvalues();
  const double top = w.size() ? std::max(w.maxCoeff(), 0.0) : 0.0;
  Vector inv = Vector::Zero(w.size());
  for (Index k = 0; k < w.size(); ++k) {
    if (top > 0.0 && w(k) > rel_cutoff * top) {
      inv(k) = 1.0 / w(k);
      ++out.rank;
    }
  }
  out.truncated = out.rank < w.size();
  const Matrix& q = es.eigenvectors();
  out.gain = ((cross * q) * inv.asDiagonal()) * q.transpose();
  return out;
}

double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols()) throw StructuralError("spectral radius requires a square matrix");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix psd_factor(const Matrix& cov, double clip_tol) {
  if (cov.rows() != cov.cols()) throw StructuralError("covariance must be square");
  if (cov.size() == 0) return cov;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(cov));
  Vector w = es.eigenvalues();
  const double top = std::max(1.0, w.cwiseAbs().maxCoeff());
  for (Index k = 0; k < w.size(); ++k) {
    if (w(k) < -clip_tol * top) {
      throw ModelError("covariance is not positive semi-definite (eigenvalue " +
                       std::to_string(w(k)) + ")");
    }
    w(k) = w(k) > 0.0 ? std::sqrt(w(k)) : 0.0;
  }
  return es.eigenvectors() * w.asDiagonal();
}

double min_symmetric_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x43494b46u};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// BlockDiag

BlockDiag::BlockDiag(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) { index(); }

BlockDiag BlockDiag::repeat(const Matrix& block, int count) {
  return BlockDiag(std::vector<Matrix>(static_cast<std::size_t>(count), block));
}

void BlockDiag::index() {
  row_off_.assign(blocks_.size() + 1, 0);
  col_off_.assign(blocks_.size() + 1, 0);
  for (std::size_t n = 0; n < blocks_.size(); ++n) {
    row_off_[n + 1] = row_off_[n] + blocks_[n].rows();
    col_off_[n + 1] = col_off_[n] + blocks_[n].cols();
  }
}

Index BlockDiag::rows() const { return row_off_.empty() ? 0 : row_off_.back(); }
Index BlockDiag::cols() const { return col_off_.empty() ? 0 : col_off_.back(); }

Matrix BlockDiag::dense() const {
  Matrix out = Matrix::Zero(rows(), cols());
  for (int n = 0; n < count(); ++n) {
    out.block(row_off_[n], col_off_[n], blocks_[n].rows(), blocks_[n].cols()) = blocks_[n];
  }
  return out;
}

BlockDiag BlockDiag::transpose() const {
  std::vector<Matrix> t;
  t.reserve(blocks_.size());
  for (const auto& b : blocks_) t.emplace_back(b.transpose());
  return BlockDiag(std::move(t));
}

Matrix BlockDiag::left_multiply(const Matrix& x) const {
  if (x.rows() != cols()) throw StructuralError("block-diagonal product: inner dimension mismatch");
  Matrix out(rows(), x.cols());
  for (int n = 0; n < count(); ++n) {
    out.middleRows(row_off_[n], blocks_[n].rows()).noalias() =
        blocks_[n] * x.middleRows(col_off_[n], blocks_[n].cols());
  }
  return out;
}

Matrix BlockDiag::right_multiply(const Matrix& x) const {
  if (x.cols() != rows()) throw StructuralError("block-diagonal product: inner dimension mismatch");
  Matrix out(x.rows(), cols());
  for (int n = 0; n < count(); ++n) {
    out.middleCols(col_off_[n], blocks_[n].cols()).noalias() =
        x.middleCols(row_off_[n], blocks_[n].rows()) * blocks_[n];
  }
  return out;
}

Matrix BlockDiag::right_multiply_transpose(const Matrix& x) const {
  if (x.cols() != cols()) throw StructuralError("block-diagonal product: inner dimension mismatch");
  Matrix out(x.rows(), rows());
  for (int n = 0; n < count(); ++n) {
    out.middleCols(row_off_[n], blocks_[n].rows()).noalias() =
        x.middleCols(col_off_[n], blocks_[n].cols()) * blocks_[n].transpose();
  }
  return out;
}

Vector BlockDiag::apply(const Vector& v) const {
  if (v.size() != cols()) throw StructuralError("block-diagonal apply: dimension mismatch");
  Vector out(rows());
  for (int n = 0; n < count(); ++n) {
    out.segment(row_off_[n], blocks_[n].rows()).noalias() =
        blocks_[n] * v.segment(col_off_[n], blocks_[n].cols());
  }
  return out;
}

BlockDiag operator*(const BlockDiag& a, const BlockDiag& b) {
  if (a.count() != b.count()) throw StructuralError("block-diagonal product: block count mismatch");
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(a.count()));
  for (int n = 0; n < a.count(); ++n) out.emplace_back(a.block(n) * b.block(n));
  return BlockDiag(std::move(out));
}

// ---------------------------------------------------------------------------
// BlockSparse

BlockSparse::BlockSparse(int block_count, Index block_size)
    : block_size_(block_size), rows_(static_cast<std::size_t>(block_count)) {}

BlockSparse BlockSparse::identity(int block_count, Index block_size) {
  BlockSparse out(block_count, block_size);
  for (int n = 0; n < block_count; ++n) out.add(n, n, Matrix::Identity(block_size, block_size));
  return out;
}

void BlockSparse::add(int n, int l, const Matrix& value) {
  auto& row = rows_[static_cast<std::size_t>(n)];
  for (auto& e : row) {
    if (e.col == l) {
      e.value += value;
      return;
    }
  }
  row.push_back({l, value});
  std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
}

Matrix BlockSparse::get(int n, int l) const {
  for (const auto& e : rows_[static_cast<std::size_t>(n)]) {
    if (e.col == l) return e.value;
  }
  return Matrix::Zero(block_size_, block_size_);
}

Matrix BlockSparse::dense() const {
  Matrix out = Matrix::Zero(size(), size());
  for (int n = 0; n < block_count(); ++n) {
    for (const auto& e : rows_[n]) {
      out.block(n * block_size_, e.col * block_size_, block_size_, block_size_) = e.value;
    }
  }
  return out;
}

BlockSparse& BlockSparse::operator-=(const BlockSparse& other) {
  for (int n = 0; n < other.block_count(); ++n) {
    for (const auto& e : other.row(n)) add(n, e.col, -e.value);
  }
  return *this;
}

Matrix BlockSparse::left_multiply(const Matrix& x) const {
  if (x.rows() != size()) throw StructuralError("block-sparse product: inner dimension mismatch");
  Matrix out = Matrix::Zero(size(), x.cols());
  for (int n = 0; n < block_count(); ++n) {
    auto dst = out.middleRows(n * block_size_, block_size_);
    for (const auto& e : rows_[n]) dst.noalias() += e.value * x.middleRows(e.col * block_size_, block_size_);
  }
  return out;
}

Matrix BlockSparse::right_multiply_transpose(const Matrix& x) const {
  if (x.cols() != size()) throw StructuralError("block-sparse product: inner dimension mismatch");
  Matrix out = Matrix::Zero(x.rows(), size());
  for (int n = 0; n < block_count(); ++n) {
    auto dst = out.middleCols(n * block_size_, block_size_);
    for (const auto& e : rows_[n]) {
      dst.noalias() += x.middleCols(e.col * block_size_, block_size_) * e.value.transpose();
    }
  }
  return out;
}

Vector BlockSparse::apply(const Vector& v) const {
  if (v.size() != size()) throw StructuralError("block-sparse apply: dimension mismatch");
  Vector out = Vector::Zero(size());
  for (int n = 0; n < block_count(); ++n) {
    auto dst = out.segment(n * block_size_, block_size_);
    for (const auto& e : rows_[n]) dst.noalias() += e.value * v.segment(e.col * block_size_, block_size_);
  }
  return out;
}

BlockSparse to_block_sparse(const BlockDiag& d) {
  const Index m = d.count() ? d.block(0).rows() : 0;
  BlockSparse out(d.count(), m);
  for (int n = 0; n < d.count(); ++n) {
    if (d.block(n).rows() != m || d.block(n).cols() != m) {
      throw StructuralError("block-sparse conversion requires uniform square blocks");
    }
    out.add(n, n, d.block(n));
  }
  return out;
}

void add_to_all_blocks(Matrix& out, const Matrix& block) {
  const Index m = block.rows();
  const Index count = out.rows() / m;
  for (Index n = 0; n < count; ++n) {
    for (Index l = 0; l < count; ++l) out.block(n * m, l * m, m, m) += block;
  }
}

Vector repeat(const Vector& v, int count) {
  Vector out(v.size() * count);
  for (int n = 0; n < count; ++n) out.segment(n * v.size(), v.size()) = v;
  return out;
}

}  // namespace cikf
