#pragma once

// Independent reference computations for the tests. Everything here is
// plain dense algebra written from the model definitions, sharing no code
// with the structured implementation beyond the ModelSpec type.

#include "cikf/covgain.hpp"
#include "cikf/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using cikf::Matrix;
using cikf::Vector;
using cikf::Index;

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix ones_kron(int n, const Matrix& x) { return kron(Matrix::Ones(n, n), x); }

inline Matrix blockdiag(const std::vector<Matrix>& blocks) {
  Index r = 0, c = 0;
  for (const auto& b : blocks) r += b.rows(), c += b.cols();
  Matrix out = Matrix::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

/// Pseudo-inverse via complete orthogonal decomposition (a different
/// factorization from the library's SVD / eigen route).
inline Matrix pinv(const Matrix& m) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
  cod.setThreshold(1e-12);
  return cod.pseudoInverse();
}

inline cikf::ModelSpec scalar_model(double a, double v, double h, double r, double sigma0, double x0 = 0.0) {
  cikf::ModelSpec s;
  s.M = 1;
  s.N = 1;
  s.M_n = {1};
  s.A = Matrix::Constant(1, 1, a);
  s.V = Matrix::Constant(1, 1, v);
  s.H_n = {Matrix::Constant(1, 1, h)};
  s.R_n = {Matrix::Constant(1, 1, r)};
  s.x0_mean = Vector::Constant(1, x0);
  s.Sigma0 = Matrix::Constant(1, 1, sigma0);
  s.adjacency = cikf::AdjacencyMatrix::Zero(1, 1);
  return s;
}

/// Small random model from the generator with overridden sizes.
inline cikf::ModelSpec small_model(int M, int N, int edges, std::uint64_t seed, double a_norm = 1.05,
                                   int M_n = 2) {
  cikf::ModelParams p = cikf::ModelParams::desk();
  p.M = M;
  p.N = N;
  p.M_n = M_n;
  p.edges = edges;
  p.a_norm = a_norm;
  return cikf::generate_paper_model(p, seed);
}

/// Scalar Riccati: returns Sigma_{i+1|i} for i = 0..T-1.
inline std::vector<double> scalar_riccati(double a, double v, double h, double r, double sigma0, int T) {
  std::vector<double> out;
  double s = sigma0;
  for (int i = 0; i < T; ++i) {
    const double sf = s - s * h * h * s / (h * s * h + r);
    s = a * sf * a + v;
    out.push_back(s);
  }
  return out;
}

/// Centralized Kalman filter covariances in information form, Sigma_{i|i}
/// and Sigma_{i+1|i} for i < T.
struct CkfOracle {
  std::vector<Matrix> filt;
  std::vector<Matrix> pred_next;
};

inline CkfOracle ckf_information_form(const cikf::ModelSpec& s, int T) {
  CkfOracle o;
  Matrix info_obs = Matrix::Zero(s.M, s.M);
  for (int n = 0; n < s.N; ++n) info_obs += s.H_n[n].transpose() * s.R_n[n].inverse() * s.H_n[n];
  Matrix pred = s.Sigma0;
  for (int i = 0; i < T; ++i) {
    const Matrix filt = (pred.inverse() + info_obs).inverse();
    o.filt.push_back(filt);
    pred = s.A * filt * s.A.transpose() + s.V;
    o.pred_next.push_back(pred);
  }
  return o;
}

/// Pseudo-model quantities from their definitions.
struct Pseudo {
  Matrix G, Gd, It, At, Ac;
  std::vector<Matrix> Hbar, Htil, Hchk;
};

inline Pseudo pseudo(const cikf::ModelSpec& s) {
  Pseudo p;
  p.G = Matrix::Zero(s.M, s.M);
  for (int n = 0; n < s.N; ++n) {
    p.Hbar.push_back(s.H_n[n].transpose() * s.R_n[n].inverse() * s.H_n[n]);
    p.G += p.Hbar.back();
  }
  p.Gd = pinv(p.G);
  p.It = Matrix::Identity(s.M, s.M) - p.Gd * p.G;
  if (p.It.norm() < 1e-9) p.It.setZero();
  p.At = p.G * s.A * p.Gd;
  p.Ac = p.G * s.A * p.It;
  for (int n = 0; n < s.N; ++n) {
    p.Htil.push_back(p.Hbar[n] * p.Gd);
    p.Hchk.push_back(p.Hbar[n] * p.It);
  }
  return p;
}

/// Dense gain matrices of one step.
struct DenseGains {
  Matrix BC, BI, K;
};

inline DenseGains dense_gains(const cikf::StepGains& g, const std::vector<std::vector<int>>& nb, Index M) {
  const Index N = static_cast<Index>(g.innovation.size());
  DenseGains d;
  d.BC = Matrix::Zero(M * N, M * N);
  std::vector<Matrix> bi, k;
  for (Index n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < nb[n].size(); ++j) {
      const Index l = nb[n][j];
      d.BC.block(n * M, l * M, M, M) -= g.consensus[n][j];
      d.BC.block(n * M, n * M, M, M) += g.consensus[n][j];
    }
    bi.push_back(g.innovation[n]);
    k.push_back(g.state[n]);
  }
  d.BI = blockdiag(bi);
  d.K = blockdiag(k);
  return d;
}

/// Joint prediction covariance C = E[u u^T] of u = [e; eps].
inline Matrix joint(const cikf::CovarianceState& c) {
  const Index MN = c.P_pred.rows();
  Matrix j(2 * MN, 2 * MN);
  j << c.P_pred, c.Pi_pred.transpose(), c.Pi_pred, c.Sigma_pred;
  return j;
}

/// One full step of the covariance recursions written from the error
/// equations
///   e_f = Fb e - B^I D_chk eps + B^I rho,  eps_f = (I - K D_G) eps + K e_f,
///   e' = A_til e_f + A_chk eps_f - 1 (x) G v,  eps' = A eps_f - 1 (x) v
/// as a single linear map of the joint covariance.
inline cikf::CovarianceState dense_step(const cikf::CovarianceState& c, const DenseGains& g,
                                        const cikf::ModelSpec& s, const Pseudo& p) {
  const int N = s.N;
  const Index M = s.M, MN = M * N;
  const Matrix I = Matrix::Identity(MN, MN);
  std::vector<Matrix> dt, dc;
  for (int n = 0; n < N; ++n) {
    dt.push_back(p.Htil[n]);
    dc.push_back(p.Hchk[n]);
  }
  const Matrix Dt = blockdiag(dt), Dc = blockdiag(dc), Db = blockdiag(p.Hbar);
  const Matrix DG = kron(Matrix::Identity(N, N), p.G);
  const Matrix Fb = I - g.BC - g.BI * Dt;
  // rows of [e_f; eps_f] in terms of [e; eps; rho]
  Matrix Lf(2 * MN, 3 * MN);
  Lf << Fb, -g.BI * Dc, g.BI, g.K * Fb, I - g.K * DG - g.K * g.BI * Dc, g.K * g.BI;
  Matrix C3 = Matrix::Zero(3 * MN, 3 * MN);
  C3.topLeftCorner(2 * MN, 2 * MN) = joint(c);
  C3.bottomRightCorner(MN, MN) = Db;
  const Matrix Cf = Lf * C3 * Lf.transpose();
  const Matrix ImA = kron(Matrix::Identity(N, N), s.A);
  Matrix Lp(2 * MN, 2 * MN);
  Lp << kron(Matrix::Identity(N, N), p.At), kron(Matrix::Identity(N, N), p.Ac), Matrix::Zero(MN, MN), ImA;
  Matrix Cp = Lp * Cf * Lp.transpose();
  Matrix Wv(2 * MN, M);
  Wv << kron(Matrix::Ones(N, 1), p.G), kron(Matrix::Ones(N, 1), Matrix::Identity(M, M));
  Cp += Wv * s.V * Wv.transpose();

  cikf::CovarianceState out;
  out.step = c.step + 1;
  out.P_pred = Cp.topLeftCorner(MN, MN);
  out.Pi_pred = Cp.bottomLeftCorner(MN, MN);
  out.Sigma_pred = Cp.bottomRightCorner(MN, MN);
  // filter part of the input step, for comparison
  out.P_filt = Cf.topLeftCorner(MN, MN);
  out.Pi_filt = Cf.bottomLeftCorner(MN, MN);
  out.Sigma_filt = Cf.bottomRightCorner(MN, MN);
  // Gamma = E[eps e_f^T]
  Matrix Le(MN, 3 * MN);
  Le << Fb, -g.BI * Dc, g.BI;
  Matrix Sel = Matrix::Zero(MN, 3 * MN);
  Sel.middleCols(MN, MN) = I;
  out.Gamma = Sel * C3 * Le.transpose();
  return out;
}

/// Innovation covariances of agent n from the joint covariance.
/// nu_til = [e^n - e^l (neighbours); H_til e^n + H_chk eps^n + noise].
inline cikf::InnovationCovariances innovation(const cikf::CovarianceState& c, const cikf::ModelSpec& s,
                                              const Pseudo& p, const std::vector<int>& nb, int n) {
  const Index M = s.M, MN = M * s.N;
  const Index d = static_cast<Index>(nb.size());
  Matrix S = Matrix::Zero((d + 1) * M, 2 * MN);
  for (Index q = 0; q < d; ++q) {
    S.block(q * M, n * M, M, M) += Matrix::Identity(M, M);
    S.block(q * M, nb[q] * M, M, M) -= Matrix::Identity(M, M);
  }
  S.block(d * M, n * M, M, M) = p.Htil[n];
  S.block(d * M, MN + n * M, M, M) = p.Hchk[n];
  Matrix E = Matrix::Zero(M, 2 * MN);
  E.middleCols(n * M, M) = Matrix::Identity(M, M);
  const Matrix C = joint(c);
  cikf::InnovationCovariances ic;
  ic.Sigma_nu_til = S * C * S.transpose();
  ic.Sigma_nu_til.bottomRightCorner(M, M) += p.Hbar[n];
  ic.Sigma_y_nu = E * C * S.transpose();
  return ic;
}

}  // namespace oracle
