#include "cikf/pseudo.hpp"

#include "cikf/error.hpp"

#include <cmath>
#include <string>

namespace cikf {
namespace {

// R^{-1} via Cholesky; R must be symmetric positive-definite.
Matrix inverse_spd(const Matrix& R, const std::string& name) {
  if (R.size() == 0) return R;
  Eigen::LLT<Matrix> llt(symmetrized(R));
  if (llt.info() != Eigen::Success) throw ModelError(name + " is not invertible (not positive-definite)");
  const Matrix inv = llt.solve(Matrix::Identity(R.rows(), R.cols()));
  if (!inv.allFinite()) throw ModelError(name + " is not invertible");
  return symmetrized(inv);
}

}  // namespace

Vector pseudo_observation(const Matrix& H, const Matrix& R, const Vector& z) {
  if (H.rows() != R.rows() || R.rows() != R.cols() || z.size() != H.rows()) {
    throw StructuralError("pseudo_observation: dimension mismatch");
  }
  return H.transpose() * (inverse_spd(R, "R") * z);
}

PseudoModel build_pseudo_model(const ModelSpec& spec) {
  spec.check_structure();
  PseudoModel pm;
  pm.M = spec.M;
  pm.N = spec.N;
  const Index M = spec.M;

  pm.G = Matrix::Zero(M, M);
  pm.H_bar_n.reserve(static_cast<std::size_t>(spec.N));
  pm.HtRinv_n.reserve(static_cast<std::size_t>(spec.N));
  for (int n = 0; n < spec.N; ++n) {
    const Matrix Rinv = inverse_spd(spec.R_n[n], "R_" + std::to_string(n));
    Matrix HtRinv = spec.H_n[n].transpose() * Rinv;
    Matrix Hbar = symmetrized(HtRinv * spec.H_n[n]);
    pm.G += Hbar;
    pm.HtRinv_n.push_back(std::move(HtRinv));
    pm.H_bar_n.push_back(std::move(Hbar));
  }
  pm.G = symmetrized(pm.G);
  pm.G_dag = pinv_symmetric(pm.G, kPseudoInverseTolerance);

  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(pm.G, Eigen::EigenvaluesOnly);
    const Vector& w = es.eigenvalues();
    const double top = w.cwiseAbs().maxCoeff();
    pm.rank_G = 0;
    for (Index k = 0; k < w.size(); ++k) pm.rank_G += std::abs(w(k)) > kPseudoInverseTolerance * top ? 1 : 0;
  }

  if (pm.rank_G == M) {
    pm.I_til = Matrix::Zero(M, M);
  } else {
    pm.I_til = symmetrized(Matrix::Identity(M, M) - pm.G_dag * pm.G);
  }
  pm.A_til = pm.G * spec.A * pm.G_dag;
  pm.A_check = pm.G * spec.A * pm.I_til;

  for (int n = 0; n < spec.N; ++n) {
    pm.H_til_n.push_back(pm.H_bar_n[n] * pm.G_dag);
    pm.H_check_n.push_back(pm.H_bar_n[n] * pm.I_til);
  }
  pm.D_H = BlockDiag(spec.H_n);
  pm.D_til_H = BlockDiag(pm.H_til_n);
  pm.D_check_H = BlockDiag(pm.H_check_n);
  pm.D_bar_H = BlockDiag(pm.H_bar_n);
  return pm;
}

}  // namespace cikf
