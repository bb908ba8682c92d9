#pragma once

#include "cikf/linalg.hpp"
#include "cikf/model.hpp"

#include <vector>

namespace cikf {

/// Pseudo-state algebra derived from a ModelSpec.
///
/// With G = sum_n H_n^T R_n^{-1} H_n the pseudo-state y = G x evolves as
///   y_{i+1} = A_til y_i + G v_i + A_check x_i
/// and agent n's pseudo-observation z_til = H_n^T R_n^{-1} z satisfies
///   z_til = H_til_n y_i + H_n^T R_n^{-1} r_i + H_check_n x_i.
struct PseudoModel {
  int M = 0;
  int N = 0;
  Matrix G;
  Matrix G_dag;
  Matrix I_til;    // I - G_dag G, projector onto ker(G)
  Matrix A_til;    // G A G_dag
  Matrix A_check;  // G A I_til
  std::vector<Matrix> H_bar_n;    // H_n^T R_n^{-1} H_n
  std::vector<Matrix> H_til_n;    // H_bar_n G_dag
  std::vector<Matrix> H_check_n;  // H_bar_n I_til
  std::vector<Matrix> HtRinv_n;   // H_n^T R_n^{-1}, maps z^n to z_til^n
  BlockDiag D_H;                  // blockdiag{H_n}
  BlockDiag D_til_H;
  BlockDiag D_check_H;
  BlockDiag D_bar_H;              // covariance of D_H^T R^{-1} r
  Index rank_G = 0;

  bool g_invertible() const { return rank_G == M; }
};

/// Relative cutoff used for G's pseudo-inverse.
inline constexpr double kPseudoInverseTolerance = 1e-12;

PseudoModel build_pseudo_model(const ModelSpec& spec);

/// H^T R^{-1} z. Throws ModelError when R is singular.
Vector pseudo_observation(const Matrix& H, const Matrix& R, const Vector& z);

inline Vector pseudo_state(const Matrix& G, const Vector& x) { return G * x; }

}  // namespace cikf
