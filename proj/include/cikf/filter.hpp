#pragma once

#include "cikf/covgain.hpp"
#include "cikf/linalg.hpp"
#include "cikf/model.hpp"
#include "cikf/pseudo.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cikf {

/// Sampled ground truth over `horizon` steps: x[0..T], z[i][n] and v[i] for
/// i < T, r[i][n] likewise.
struct Trajectory {
  std::vector<Vector> x;
  std::vector<std::vector<Vector>> z;
  std::vector<Vector> v;
  std::vector<std::vector<Vector>> r;

  int horizon() const { return static_cast<int>(z.size()); }
};

/// Independent streams per noise source: x0 -> 0, v -> 1, r^n -> 2 + n.
Trajectory simulate_truth(const ModelSpec& spec, int horizon, std::uint64_t seed);

/// Estimates held by all agents. At step i, y_pred/x_pred are the i|i-1
/// predictions and y_filt/x_filt the filtered estimates of step i-1 (empty
/// at i = 0).
struct NetworkEstimate {
  int step = 0;
  std::vector<Vector> y_pred;
  std::vector<Vector> x_pred;
  std::vector<Vector> y_filt;
  std::vector<Vector> x_filt;

  int agent_count() const { return static_cast<int>(x_pred.size()); }
  static Vector stack(const std::vector<Vector>& per_agent);
};

NetworkEstimate cikf_init(const ModelSpec& spec, const PseudoModel& pm);

/// What agent n sees at one step: its own predictions, its neighbours'
/// pseudo-state predictions (in neighbourhood order) and its observation.
struct AgentInput {
  const Vector* y_pred = nullptr;
  const Vector* x_pred = nullptr;
  std::vector<const Vector*> neighbor_y_pred;
  const Vector* z = nullptr;
};

struct AgentOutput {
  Vector y_filt;
  Vector x_filt;
  Vector y_pred;
  Vector x_pred;
};

/// One filter + predict update of agent n with gains of the current step.
AgentOutput cikf_agent_update(int n, const AgentInput& in, const StepGains& gains, const PseudoModel& pm,
                              const Matrix& A);

/// Synchronous network step; `z[n]` is agent n's observation at est.step.
/// Throws SequencingError when the schedule is too short and
/// ConfigurationError when its dimensions disagree with pm.
NetworkEstimate cikf_step(const NetworkEstimate& est, const GainSchedule& schedule, const PseudoModel& pm,
                          const Matrix& A, const std::vector<Vector>& z);

/// Filter bound to a model and a schedule designed for it.
class CikfFilter {
 public:
  CikfFilter(const ModelSpec& spec, const GainSchedule& schedule);

  const NetworkEstimate& estimate() const { return est_; }
  const PseudoModel& pseudo_model() const { return pm_; }
  const NetworkEstimate& step(const std::vector<Vector>& z);
  void reset();

 private:
  ModelSpec spec_;
  const GainSchedule& schedule_;
  PseudoModel pm_;
  NetworkEstimate est_;
};

/// Centralized Kalman filter covariances over the stacked observation model.
struct CkfCovariances {
  std::vector<Matrix> gain;        // K^c_i, M x sum(M_n)
  std::vector<Matrix> Sigma_pred;  // Sigma^c_{i|i-1}, i = 0..T
  std::vector<Matrix> Sigma_filt;  // Sigma^c_{i|i}, i < T

  int horizon() const { return static_cast<int>(gain.size()); }
  /// trace Sigma^c_{i+1|i}
  double trace_next(int i) const { return Sigma_pred[static_cast<std::size_t>(i) + 1].trace(); }
};

CkfCovariances ckf_covariances(const ModelSpec& spec, int horizon);

struct CkfResult {
  std::vector<Vector> x_filt;  // x^c_{i|i}
  std::vector<Vector> x_pred;  // x^c_{i+1|i}
};

CkfResult ckf_run(const ModelSpec& spec, const CkfCovariances& cov, const Trajectory& traj);

/// CSV with columns step,agent,component,value,series; truth rows use agent -1.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// Rows for each estimate in `history` (series y_pred, x_pred, y_filt, x_filt).
void write_estimates_csv(const std::filesystem::path& path, const std::vector<NetworkEstimate>& history);

}  // namespace cikf
