#include "cikf/capacity.hpp"

#include "cikf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cikf {
namespace {

Matrix identity(const PseudoModel& pm) {
  const Index MN = static_cast<Index>(pm.M) * pm.N;
  return Matrix::Identity(MN, MN);
}

BlockDiag state_gain_contraction(const StepGains& gains, const PseudoModel& pm) {
  std::vector<Matrix> blocks;
  for (int n = 0; n < pm.N; ++n) blocks.push_back(Matrix::Identity(pm.M, pm.M) - gains.state[n] * pm.G);
  return BlockDiag(std::move(blocks));
}

std::vector<Matrix> projectors(const PseudoModel& pm) {
  std::vector<Matrix> out;
  for (int n = 0; n < pm.N; ++n) out.push_back(pinv(pm.H_til_n[n]) * pm.H_til_n[n]);
  return out;
}

double contraction_norm(const std::vector<Matrix>& proj, const Matrix& laplacian, Index M, double alpha,
                        double beta, double gamma) {
  const int N = static_cast<int>(proj.size());
  Matrix c = Matrix::Identity(M * N, M * N) * (1.0 - gamma);
  for (int n = 0; n < N; ++n) {
    c.block(n * M, n * M, M, M) -= alpha * proj[n];
    for (int l = 0; l < N; ++l) {
      const double w = laplacian(n, l);
      if (w != 0.0) c.block(n * M, l * M, M, M).diagonal().array() -= beta * w;
    }
  }
  return spectral_norm(c);
}

std::vector<double> grid(double hi, int k) {
  std::vector<double> g;
  for (int j = 0; j < k; ++j) g.push_back(k == 1 ? 0.0 : hi * j / (k - 1));
  return g;
}

}  // namespace

SpectralInfo spectral_tools(const Matrix& m) {
  SpectralInfo s;
  s.norm = spectral_norm(m);
  s.radius = m.rows() == m.cols() ? spectral_radius(m) : 0.0;
  return s;
}

Matrix pseudo_gain_contraction(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                               const PseudoModel& pm) {
  return identity(pm) - gains.consensus_matrix(neighborhoods).dense() -
         (gains.innovation_matrix() * pm.D_til_H).dense();
}

Matrix pseudo_error_transition(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                               const PseudoModel& pm) {
  return BlockDiag::repeat(pm.A_til, pm.N).left_multiply(pseudo_gain_contraction(gains, neighborhoods, pm));
}

Matrix state_error_transition(const StepGains& gains, const PseudoModel& pm, const Matrix& A) {
  return (BlockDiag::repeat(A, pm.N) * state_gain_contraction(gains, pm)).dense();
}

ErrorNoiseCovariances error_noise_covariances(const StepGains& gains,
                                              const std::vector<std::vector<int>>& neighborhoods,
                                              const PseudoModel& pm, const ModelSpec& spec,
                                              const CovarianceState& cov) {
  if (!cov.has_pseudo_filter()) throw SequencingError("error noise covariances need the filter part of the step");
  const int N = pm.N;
  const BlockDiag a_til = BlockDiag::repeat(pm.A_til, N);
  const BlockDiag a_chk = BlockDiag::repeat(pm.A_check, N);
  const BlockDiag a_blk = BlockDiag::repeat(spec.A, N);
  const BlockDiag bi = gains.innovation_matrix();
  const BlockDiag k = gains.state_matrix();
  const Matrix bi_check = (bi * pm.D_check_H).dense();
  const Matrix fb = pseudo_gain_contraction(gains, neighborhoods, pm);
  const Matrix fk = state_gain_contraction(gains, pm).dense();

  // phi_til = F1 eps_p + F2 e_p - F3 w + 1 (x) G v
  const Matrix f1 = a_chk.left_multiply(fk - k.left_multiply(bi_check)) - a_til.left_multiply(bi_check);
  const Matrix f2 = a_chk.left_multiply(k.left_multiply(fb));
  const Matrix f3 = (a_til.dense() + a_chk.left_multiply(k.dense())) * bi.dense();

  Matrix phi_til = f1 * cov.Sigma_pred * f1.transpose() + f2 * cov.P_pred * f2.transpose();
  const Matrix cross = f1 * cov.Pi_pred * f2.transpose();
  phi_til += cross + cross.transpose();
  phi_til += pm.D_bar_H.right_multiply_transpose(f3) * f3.transpose();
  add_to_all_blocks(phi_til, pm.G * spec.V * pm.G);

  // phi = (I (x) A) K e_f + 1 (x) v
  const Matrix ak = (a_blk * k).dense();
  Matrix phi = ak * cov.P_filt * ak.transpose();
  add_to_all_blocks(phi, spec.V);
  return {symmetrized(phi_til), symmetrized(phi)};
}

JointErrorSystem joint_error_system(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                                    const PseudoModel& pm, const ModelSpec& spec) {
  const int N = pm.N;
  const Index MN = static_cast<Index>(pm.M) * N;
  const BlockDiag a_til = BlockDiag::repeat(pm.A_til, N);
  const BlockDiag a_chk = BlockDiag::repeat(pm.A_check, N);
  const BlockDiag a_blk = BlockDiag::repeat(spec.A, N);
  const BlockDiag bi = gains.innovation_matrix();
  const BlockDiag k = gains.state_matrix();
  const Matrix bi_check = (bi * pm.D_check_H).dense();
  const Matrix fb = pseudo_gain_contraction(gains, neighborhoods, pm);
  const Matrix fk = state_gain_contraction(gains, pm).dense();

  // e_f = Fb e_p - B^I D_chk eps_p + B^I rho,  eps_f = Fk eps_p + K e_f
  const Matrix eps_from_eps = fk - k.left_multiply(bi_check);
  const Matrix eps_from_e = k.left_multiply(fb);
  JointErrorSystem sys;
  sys.T.resize(2 * MN, 2 * MN);
  sys.T.topLeftCorner(MN, MN) = a_til.left_multiply(fb) + a_chk.left_multiply(eps_from_e);
  sys.T.topRightCorner(MN, MN) = a_chk.left_multiply(eps_from_eps) - a_til.left_multiply(bi_check);
  sys.T.bottomLeftCorner(MN, MN) = a_blk.left_multiply(eps_from_e);
  sys.T.bottomRightCorner(MN, MN) = a_blk.left_multiply(eps_from_eps);

  const Matrix rho = bi.left_multiply(psd_factor(pm.D_bar_H.dense()));
  const Matrix v = psd_factor(spec.V);
  sys.W = Matrix::Zero(2 * MN, MN + pm.M);
  sys.W.topLeftCorner(MN, MN) = a_til.left_multiply(rho) + a_chk.left_multiply(k.left_multiply(rho));
  sys.W.bottomLeftCorner(MN, MN) = a_blk.left_multiply(k.left_multiply(rho));
  for (int n = 0; n < N; ++n) {
    sys.W.block(static_cast<Index>(n) * pm.M, MN, pm.M, pm.M) = -pm.G * v;
    sys.W.block(MN + static_cast<Index>(n) * pm.M, MN, pm.M, pm.M) = -v;
  }
  return sys;
}

StabilityReport stability_check(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                                const PseudoModel& pm, const ModelSpec& spec, const CovarianceState* cov) {
  const Matrix contraction = pseudo_gain_contraction(gains, neighborhoods, pm);
  StabilityReport r;
  r.contraction_norm = spectral_norm(contraction);
  r.rho_F_til = spectral_radius(BlockDiag::repeat(pm.A_til, pm.N).left_multiply(contraction));
  r.rho_F = spectral_radius(state_error_transition(gains, pm, spec.A));
  if (cov != nullptr) {
    const ErrorNoiseCovariances phi = error_noise_covariances(gains, neighborhoods, pm, spec, *cov);
    r.noise_norm_til = spectral_norm(phi.Phi_til);
    r.noise_norm = spectral_norm(phi.Phi);
  }
  return r;
}

std::string to_string(GainFamily f) { return f == GainFamily::Consensus ? "consensus" : "sparsity"; }

GainFamily gain_family_from_string(const std::string& s) {
  if (s == "consensus") return GainFamily::Consensus;
  if (s == "sparsity") return GainFamily::SparsityPattern;
  throw ParameterError("unknown gain family '" + s + "' (expected consensus or sparsity)");
}

double structured_contraction_norm(const PseudoModel& pm, const GraphSpectrum& graph, double alpha, double beta,
                                   double gamma) {
  return contraction_norm(projectors(pm), graph.laplacian, pm.M, alpha, beta, gamma);
}

CapacityEstimate capacity_lower_bound(const PseudoModel& pm, const GraphSpectrum& graph, int search_budget,
                                      GainFamily family) {
  if (search_budget < 1) throw ParameterError("search budget must be >= 1");
  if (graph.agent_count() != pm.N) throw StructuralError("graph and model disagree on N");

  Eigen::SelfAdjointEigenSolver<Matrix> es(pm.G, Eigen::EigenvaluesOnly);
  const Vector& w = es.eigenvalues();
  CapacityEstimate est;
  est.family = family;
  est.lambda_m = w.maxCoeff();
  if (!(est.lambda_m > 0)) throw ModelError("G is zero; no agent observes anything");
  est.lambda_1 = est.lambda_m;
  for (Index k = 0; k < w.size(); ++k) {
    if (w(k) > kNonzeroEigenvalueCutoff * est.lambda_m) est.lambda_1 = std::min(est.lambda_1, w(k));
  }

  const std::vector<Matrix> proj = projectors(pm);
  const double lambda_n = graph.eigenvalues.size() ? graph.eigenvalues.maxCoeff() : 0.0;
  const bool sparse = family == GainFamily::SparsityPattern;
  const int k = sparse ? std::max(1, static_cast<int>(std::cbrt(static_cast<double>(search_budget)) + 1e-9))
                       : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(search_budget)) + 1e-9));
  const std::vector<double> alphas = grid(2.0, k);
  const std::vector<double> betas = grid(lambda_n > 0 ? 2.0 / lambda_n : 0.0, lambda_n > 0 ? k : 1);
  const std::vector<double> gammas = grid(1.0, sparse ? k : 1);

  est.achieved_norm = std::numeric_limits<double>::infinity();
  for (double a : alphas) {
    for (double b : betas) {
      for (double g : gammas) {
        const double norm = contraction_norm(proj, graph.laplacian, pm.M, a, b, g);
        ++est.evaluations;
        if (norm < est.achieved_norm) {
          est.achieved_norm = norm;
          est.alpha = a;
          est.beta = b;
          est.gamma = g;
        }
      }
    }
  }
  est.unbounded = est.achieved_norm < kUnboundedNorm;
  est.C_lower = est.unbounded ? kCapacityCap : est.lambda_1 / (est.lambda_m * est.achieved_norm);
  return est;
}

}  // namespace cikf
