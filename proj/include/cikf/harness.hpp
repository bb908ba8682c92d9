#pragma once

#include "cikf/covgain.hpp"
#include "cikf/io.hpp"
#include "cikf/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cikf {

/// Entry i of every series refers to the one-step prediction i+1|i.
/// Empirical series are NaN when runs == 0.
struct MseReport {
  std::vector<double> theory_cikf_total;      // trace Sigma_{i+1|i}
  std::vector<double> theory_cikf_per_agent;  // ... / N
  std::vector<double> theory_ckf;             // trace Sigma^c_{i+1|i}
  std::vector<double> emp_cikf;               // mean over runs and agents of ||x - x_hat^n||^2
  std::vector<double> emp_cikf_total;         // mean over runs of sum over agents
  std::vector<double> emp_ckf;
  int runs = 0;
  std::uint64_t seed = 0;
  std::uint64_t model_hash = 0;

  int horizon() const { return static_cast<int>(theory_cikf_total.size()); }
};

/// 10 log10(x); -inf for 0, NaN for negative or NaN input.
double to_db(double x);

/// Sums over runs of the stacked errors u = [eps; e] (length 2MN).
/// pred_*[i] refers to u_{i|i-1} (i = 0..T), filt_*[i] to u_{i|i} (i < T).
struct ErrorMoments {
  int runs = 0;
  std::vector<Vector> pred_sum;
  std::vector<Matrix> pred_outer;     // sum u u^T
  std::vector<Matrix> pred_outer_sq;  // sum (u u^T).^2, for standard errors
  std::vector<Vector> filt_sum;
  std::vector<Vector> filt_sq;        // sum u.^2

  void merge(const ErrorMoments& other);
  Vector pred_mean(int i) const;
  /// E[u u^T] estimate and its entrywise standard error.
  Matrix pred_second_moment(int i) const;
  Matrix pred_second_moment_se(int i) const;
  Vector pred_mean_se(int i) const;
  Vector filt_mean(int i) const;
  Vector filt_mean_se(int i) const;
};

struct MonteCarloOptions {
  int threads = 0;  // 0: hardware concurrency; never affects results
  bool collect_moments = false;
};

struct MonteCarloResult {
  MseReport report;
  std::optional<ErrorMoments> moments;
};

/// Run k uses seed base_seed + k. Runs are processed in fixed blocks whose
/// partial sums are merged in run order, so results do not depend on the
/// thread count.
MonteCarloResult run_montecarlo(const ModelSpec& spec, const GainSchedule& schedule, int runs, int horizon,
                                std::uint64_t base_seed, const MonteCarloOptions& options = {});

/// Theory-only report (runs = 0).
MseReport theory_report(const ModelSpec& spec, const GainSchedule& schedule, int horizon);

struct SeriesSummary {
  double steady_state = 0;     // mean of the last 5 linear values
  double steady_state_db = 0;
  int convergence_step = -1;   // first i with |dB_i - dB_{i-1}| < 0.01, -1 if never
};

inline constexpr int kSteadyStateWindow = 5;
inline constexpr double kConvergenceDb = 0.01;

SeriesSummary summarize_series(const std::vector<double>& linear);

struct ComparisonSummary {
  SeriesSummary theory_cikf;  // per-agent
  SeriesSummary theory_ckf;
  SeriesSummary emp_cikf;
  SeriesSummary emp_ckf;
  double gap_theory_db = 0;  // CIKF_ss - CKF_ss
  double gap_emp_db = 0;
  bool provisional = false;  // horizon shorter than the steady-state window
  int horizon = 0;
  int runs = 0;
};

ComparisonSummary mse_compare(const MseReport& report);

enum class ReportFormat { Csv, Json };
ReportFormat report_format_from_string(const std::string& s);

std::string report_to_csv(const MseReport& report, const std::optional<FileMeta>& meta = std::nullopt);
std::string report_to_json(const MseReport& report, const std::optional<FileMeta>& meta = std::nullopt);
MseReport report_from_json(const std::string& text);
std::string summary_to_json(const ComparisonSummary& summary, const std::optional<FileMeta>& meta = std::nullopt);
/// Self-contained SVG line chart of the dB curves.
std::string report_to_svg(const MseReport& report, const std::string& title = "MSE");

void export_results(const MseReport& report, const std::filesystem::path& path, ReportFormat format,
                    const std::optional<FileMeta>& meta = std::nullopt);
MseReport import_results(const std::filesystem::path& path);

}  // namespace cikf
