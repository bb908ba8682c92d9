#include "cikf/capacity.hpp"
#include "cikf/error.hpp"
#include "cikf/linalg.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace cikf;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  auto eng = make_stream(seed, 99);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = g(eng);
  return m;
}

void check_penrose(const Matrix& a, const Matrix& ap, double tol) {
  CHECK((a * ap * a - a).norm() < tol);
  CHECK((ap * a * ap - ap).norm() < tol);
  CHECK(((a * ap).transpose() - a * ap).norm() < tol);
  CHECK(((ap * a).transpose() - ap * a).norm() < tol);
}

}  // namespace

TEST_CASE("pinv of diag(2, 0)") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  Matrix expect = Matrix::Zero(2, 2);
  expect(0, 0) = 0.5;
  CHECK((pinv(d) - expect).norm() < 1e-15);
  CHECK((pinv_symmetric(d) - expect).norm() < 1e-15);
}

TEST_CASE("pinv satisfies the Penrose conditions on rank-deficient matrices") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix low = random_matrix(6, 3, seed) * random_matrix(3, 5, seed + 100);
    check_penrose(low, pinv(low), 1e-10);
    const Matrix sym = low * low.transpose();
    check_penrose(sym, pinv_symmetric(sym), 1e-9);
    CHECK((pinv(low) - oracle::pinv(low)).norm() < 1e-9);
  }
}

TEST_CASE("solve_right_psd matches an explicit solve and truncates null directions") {
  const Matrix b = random_matrix(4, 4, 7);
  const Matrix cov = b * b.transpose() + Matrix::Identity(4, 4);
  const Matrix cross = random_matrix(2, 4, 8);
  const RightSolve rs = solve_right_psd(cross, cov, 1e-10);
  CHECK(rs.rank == 4);
  CHECK_FALSE(rs.truncated);
  CHECK((rs.gain - cross * cov.inverse()).norm() < 1e-10);

  Matrix sing = Matrix::Zero(3, 3);
  sing(0, 0) = 2.0;
  Matrix c2 = Matrix::Ones(1, 3);
  const RightSolve r2 = solve_right_psd(c2, sing, 1e-10);
  CHECK(r2.rank == 1);
  CHECK(r2.truncated);
  CHECK(r2.gain(0, 0) == doctest::Approx(0.5));
  CHECK(r2.gain(0, 1) == 0.0);
}

TEST_CASE("spectral tools: diagonal, nilpotent and random matrices") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -2;
  auto s = spectral_tools(d);
  CHECK(s.radius == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(s.norm == doctest::Approx(2.0).epsilon(1e-9));

  Matrix nil = Matrix::Zero(2, 2);
  nil(0, 1) = 1;
  s = spectral_tools(nil);
  CHECK(s.radius < 1e-9);
  CHECK(s.norm == doctest::Approx(1.0).epsilon(1e-9));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix m = random_matrix(10, 10, seed);
    s = spectral_tools(m);
    CHECK(s.radius <= s.norm * (1 + 1e-9));
  }
}

TEST_CASE("psd_factor reproduces the covariance and rejects indefinite input") {
  const Matrix b = random_matrix(5, 3, 3);
  const Matrix cov = b * b.transpose();  // rank 3
  const Matrix f = psd_factor(cov);
  CHECK((f * f.transpose() - cov).norm() < 1e-10);
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1;
  CHECK_THROWS_AS(psd_factor(bad), ModelError);
  CHECK(psd_factor(Matrix::Zero(3, 3)).norm() == 0.0);
}

TEST_CASE("make_stream is deterministic and separates streams") {
  auto a = make_stream(5, 1), b = make_stream(5, 1), c = make_stream(5, 2), d = make_stream(6, 1);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}

TEST_CASE("BlockDiag and BlockSparse products agree with dense algebra") {
  std::vector<Matrix> blocks = {random_matrix(2, 3, 1), random_matrix(1, 1, 2), random_matrix(3, 2, 3)};
  const BlockDiag bd(blocks);
  const Matrix dense = oracle::blockdiag(blocks);
  CHECK((bd.dense() - dense).norm() == 0.0);
  const Matrix x = random_matrix(6, 4, 4);
  CHECK((bd.left_multiply(x) - dense * x).norm() < 1e-12);
  const Matrix y = random_matrix(4, 6, 5);
  CHECK((bd.right_multiply(y) - y * dense).norm() < 1e-12);
  const Matrix z = random_matrix(4, 6, 6);
  CHECK((bd.right_multiply_transpose(z) - z * dense.transpose()).norm() < 1e-12);
  const Vector v = random_matrix(6, 1, 7);
  CHECK((bd.apply(v) - dense * v).norm() < 1e-12);
  CHECK((bd.transpose().dense() - dense.transpose()).norm() == 0.0);

  const BlockDiag sq({random_matrix(2, 2, 8), random_matrix(2, 2, 9), random_matrix(2, 2, 10)});
  const BlockDiag sq2({random_matrix(2, 2, 11), random_matrix(2, 2, 12), random_matrix(2, 2, 13)});
  CHECK(((sq * sq2).dense() - sq.dense() * sq2.dense()).norm() < 1e-12);

  BlockSparse bs(3, 2);
  bs.add(0, 2, random_matrix(2, 2, 14));
  bs.add(1, 1, random_matrix(2, 2, 15));
  bs.add(2, 0, random_matrix(2, 2, 16));
  bs.add(2, 0, random_matrix(2, 2, 17));
  const Matrix bsd = bs.dense();
  CHECK((bs.get(2, 0) - bsd.block(4, 0, 2, 2)).norm() == 0.0);
  CHECK(bs.get(0, 0).norm() == 0.0);
  const Matrix w = random_matrix(6, 6, 18);
  CHECK((bs.left_multiply(w) - bsd * w).norm() < 1e-12);
  CHECK((bs.right_multiply_transpose(w) - w * bsd.transpose()).norm() < 1e-12);
  BlockSparse id = BlockSparse::identity(3, 2);
  id -= bs;
  CHECK((id.dense() - (Matrix::Identity(6, 6) - bsd)).norm() < 1e-12);
  CHECK((to_block_sparse(sq).dense() - sq.dense()).norm() == 0.0);

  Matrix acc = Matrix::Zero(6, 6);
  const Matrix blk = random_matrix(2, 2, 19);
  add_to_all_blocks(acc, blk);
  CHECK((acc - oracle::ones_kron(3, blk)).norm() == 0.0);
}
