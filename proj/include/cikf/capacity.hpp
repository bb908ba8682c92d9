#pragma once

#include "cikf/covgain.hpp"
#include "cikf/linalg.hpp"
#include "cikf/model.hpp"
#include "cikf/pseudo.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cikf {

struct SpectralInfo {
  double radius = 0;
  double norm = 0;
};

/// Spectral radius (square matrices only, else 0) and spectral norm.
SpectralInfo spectral_tools(const Matrix& m);

/// I - B^C - B^I D_til_H as a dense MN x MN matrix.
Matrix pseudo_gain_contraction(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                               const PseudoModel& pm);
/// F_til = (I (x) A_til)(I - B^C - B^I D_til_H)
Matrix pseudo_error_transition(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                               const PseudoModel& pm);
/// F = (I (x) A)(I - K (I (x) G))
Matrix state_error_transition(const StepGains& gains, const PseudoModel& pm, const Matrix& A);

/// Covariances of the driving terms of the prediction-error recursions
///   e_{i+1|i} = F_til e_{i|i-1} + phi_til,  eps_{i+1|i} = F eps_{i|i-1} + phi.
struct ErrorNoiseCovariances {
  Matrix Phi_til;
  Matrix Phi;
};

/// Needs the full covariance state of the step (prediction and filter part).
ErrorNoiseCovariances error_noise_covariances(const StepGains& gains,
                                              const std::vector<std::vector<int>>& neighborhoods,
                                              const PseudoModel& pm, const ModelSpec& spec,
                                              const CovarianceState& cov);

/// Joint prediction-error system u' = T u + W w with u = [e; eps] (pseudo
/// then state errors) and w = [unit observation noise; unit process noise].
struct JointErrorSystem {
  Matrix T;
  Matrix W;
};

JointErrorSystem joint_error_system(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                                    const PseudoModel& pm, const ModelSpec& spec);

struct StabilityReport {
  double rho_F_til = 0;
  double rho_F = 0;
  double contraction_norm = 0;
  std::optional<double> noise_norm_til;  // ||Phi_til||_2, when covariances were given
  std::optional<double> noise_norm;      // ||Phi||_2

  bool stable() const { return rho_F_til < 1.0 && rho_F < 1.0; }
};

StabilityReport stability_check(const StepGains& gains, const std::vector<std::vector<int>>& neighborhoods,
                                const PseudoModel& pm, const ModelSpec& spec,
                                const CovarianceState* cov = nullptr);

/// Structured gains searched by capacity_lower_bound.
///  Consensus:       B^C = beta (L (x) I), B^I_nn = alpha pinv(H_til_n)
///  SparsityPattern: B^C = gamma I + beta (L (x) I), same B^I
enum class GainFamily { Consensus, SparsityPattern };

std::string to_string(GainFamily f);
GainFamily gain_family_from_string(const std::string& s);

inline constexpr double kUnboundedNorm = 1e-12;
inline constexpr double kCapacityCap = 1e12;
/// Eigenvalues of G below this fraction of the largest count as zero.
inline constexpr double kNonzeroEigenvalueCutoff = 1e-10;

struct CapacityEstimate {
  double C_lower = 0;
  double lambda_1 = 0;  // smallest nonzero eigenvalue of G
  double lambda_m = 0;  // largest eigenvalue of G
  double achieved_norm = 0;
  bool unbounded = false;  // achieved_norm < kUnboundedNorm; C_lower is then kCapacityCap
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
  int evaluations = 0;
  GainFamily family = GainFamily::Consensus;
};

/// Contraction norm of the structured gains (alpha, beta, gamma).
double structured_contraction_norm(const PseudoModel& pm, const GraphSpectrum& graph, double alpha, double beta,
                                   double gamma = 0.0);

/// Grid search of lambda_1 / (lambda_m ||I - B^C - B^I D_til_H||_2) over the
/// family with at most `search_budget` evaluations. The result is a lower
/// bound on the tracking capacity. Ties go to the smallest (alpha, beta, gamma).
CapacityEstimate capacity_lower_bound(const PseudoModel& pm, const GraphSpectrum& graph, int search_budget,
                                      GainFamily family = GainFamily::Consensus);

}  // namespace cikf
