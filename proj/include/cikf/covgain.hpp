#pragma once

#include "cikf/linalg.hpp"
#include "cikf/model.hpp"
#include "cikf/pseudo.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cikf {

/// Stacked error covariances of all N agents at one time step (MN x MN each).
///
/// e = 1 (x) y - y_hat (pseudo-state), eps = 1 (x) x - x_hat (state):
///   P = E[e e^T], Sigma = E[eps eps^T], Pi = E[eps e^T],
///   Gamma = E[eps_{i|i-1} e_{i|i}^T].
/// The prediction part is indexed i|i-1; the filter part i|i.
struct CovarianceState {
  int step = 0;
  Matrix P_pred;
  Matrix Sigma_pred;
  Matrix Pi_pred;
  Matrix Gamma;
  Matrix P_filt;
  Matrix Sigma_filt;
  Matrix Pi_filt;

  bool has_pseudo_filter() const { return Gamma.size() > 0 && P_filt.size() > 0; }
  bool has_state_filter() const { return Sigma_filt.size() > 0 && Pi_filt.size() > 0; }
};

/// Covariances of agent n's new information at one step.
/// Sigma_y_nu is M x (d_n+1)M with neighbour blocks first (in neighbourhood
/// order) and the pseudo-observation block last.
struct InnovationCovariances {
  Matrix Sigma_y_nu;
  Matrix Sigma_nu_til;
  Matrix Sigma_x_nu;  // empty until the pseudo-state filter stage ran
  Matrix Sigma_nu;    // ditto
};

/// Gains of one step, stored per agent.
struct StepGains {
  // consensus[n][j] = B^{n l_j} for l_j = neighborhoods[n][j]
  std::vector<std::vector<Matrix>> consensus;
  std::vector<Matrix> innovation;  // B^{nn}
  std::vector<Matrix> state;       // K^n

  int agent_count() const { return static_cast<int>(innovation.size()); }

  /// B^C: off-diagonal block (n, l) = -B^{nl}, diagonal block = sum_l B^{nl}.
  BlockSparse consensus_matrix(const std::vector<std::vector<int>>& neighborhoods) const;
  BlockDiag innovation_matrix() const { return BlockDiag(innovation); }
  BlockDiag state_matrix() const { return BlockDiag(state); }
  /// [B^{n l_1}, ..., B^{n l_d}, B^{nn}]
  Matrix agent_row(int n) const;
};

struct GainDiagnostics {
  int truncated_consensus_solves = 0;  // agents whose Sigma_nu_til was rank deficient
  int truncated_state_solves = 0;
};

struct GainSchedule {
  int M = 0;
  int N = 0;
  std::uint64_t model_hash = 0;
  std::vector<std::vector<int>> neighborhoods;
  std::vector<StepGains> steps;
  std::vector<GainDiagnostics> diagnostics;
  std::vector<double> theory_mse_total;      // trace Sigma_{i+1|i}
  std::vector<double> theory_mse_per_agent;  // trace Sigma_{i+1|i} / N

  int horizon() const { return static_cast<int>(steps.size()); }
};

/// Relative eigenvalue cutoff for the innovation-covariance solves.
inline constexpr double kGainSolveCutoff = 1e-10;

/// Prediction covariances at i = 0:
/// Sigma = 11^T (x) Sigma0, P = 11^T (x) G Sigma0 G, Pi = 11^T (x) Sigma0 G.
CovarianceState init_covariances(const Matrix& Sigma0, const Matrix& G, int N);

/// Innovation covariances of agent n. The state part (Sigma_x_nu, Sigma_nu)
/// is filled only when `cov` already holds Gamma and P_filt; request it
/// with `require_state_part` to get a SequencingError otherwise.
InnovationCovariances innovation_covariances(const CovarianceState& cov, const PseudoModel& pm,
                                             const GraphSpectrum& graph, int n,
                                             bool require_state_part = false);

/// Given B^C and B^I, fills Gamma and P_filt of `cov`.
void apply_pseudo_gains(CovarianceState& cov, const PseudoModel& pm, const BlockSparse& consensus,
                        const BlockDiag& innovation);

/// Given K, fills Sigma_filt and Pi_filt of `cov` (requires Gamma and P_filt).
void apply_state_gains(CovarianceState& cov, const PseudoModel& pm, const BlockDiag& state_gain);

struct StepDesign {
  StepGains gains;
  GainDiagnostics diagnostics;
};

/// Designs the minimum-MSE gains of the current step and completes the
/// filter part of `cov`:
///  1. per agent B_hat^n = Sigma_y_nu * pinv(Sigma_nu_til), assemble B^C and B^I;
///  2. Gamma and P_filt;
///  3. per agent K^n = Sigma_x_nu * pinv(Sigma_nu), assemble K;
///  4. Sigma_filt and Pi_filt.
StepDesign step_gains_and_filter_covariances(CovarianceState& cov, const PseudoModel& pm,
                                             const GraphSpectrum& graph);

/// Lyapunov-type propagation of the filter covariances to step i+1.
CovarianceState predict_covariance_update(const CovarianceState& filt, const PseudoModel& pm,
                                          const ModelSpec& spec);

struct CovarianceTrace {
  int step = 0;
  double trace_P_pred = 0;
  double trace_Sigma_pred = 0;
  double trace_P_filt = 0;
  double trace_Sigma_filt = 0;
  double trace_Sigma_next = 0;  // trace Sigma_{i+1|i}
};

inline constexpr double kDefaultDesignRegularization = 2e-10;

struct ScheduleOptions {
  /// Keep every CovarianceState (dense MN x MN matrices); only sensible for
  /// small models.
  bool keep_states = false;
  /// Gains are designed on a shadow recursion whose prediction covariances
  /// get this multiple of their largest diagonal entry added on the
  /// diagonal. Without it the gains act arbitrarily on error directions the
  /// noise never reaches, and roundoff growing there can destabilize the
  /// filter. The reported covariances always follow the exact recursions
  /// for the designed gains. 0 designs on the exact covariances.
  double design_regularization = kDefaultDesignRegularization;
};

struct ScheduleResult {
  GainSchedule schedule;
  std::vector<CovarianceTrace> traces;
  std::vector<CovarianceState> states;  // states[i]: step i, prediction + filter part
  CovarianceState last_step;            // full state of step horizon-1
  CovarianceState final_prediction;     // prediction part at step `horizon`
};

/// Offline gain design over `horizon` steps.
ScheduleResult precompute_schedule(const ModelSpec& spec, int horizon, const ScheduleOptions& options = {});

/// Binary schedule file with an embedded model hash.
void save_schedule(const std::filesystem::path& path, const GainSchedule& schedule);
GainSchedule load_schedule(const std::filesystem::path& path);

/// Throws ConfigurationError unless `schedule` was designed for `spec`.
void check_schedule_matches(const GainSchedule& schedule, const ModelSpec& spec);

}  // namespace cikf
