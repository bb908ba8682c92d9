#include "cikf/harness.hpp"

#include "cikf/error.hpp"
#include "cikf/filter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace cikf {
namespace {

constexpr int kRunBlock = 64;

struct BlockSums {
  std::vector<double> cikf;
  std::vector<double> ckf;
  std::optional<ErrorMoments> moments;
};

ErrorMoments empty_moments(Index dim, int horizon) {
  ErrorMoments m;
  for (int i = 0; i <= horizon; ++i) {
    m.pred_sum.push_back(Vector::Zero(dim));
    m.pred_outer.push_back(Matrix::Zero(dim, dim));
    m.pred_outer_sq.push_back(Matrix::Zero(dim, dim));
  }
  for (int i = 0; i < horizon; ++i) {
    m.filt_sum.push_back(Vector::Zero(dim));
    m.filt_sq.push_back(Vector::Zero(dim));
  }
  return m;
}

Vector joint_error(const Vector& x, const Vector& y, const std::vector<Vector>& x_hat,
                   const std::vector<Vector>& y_hat) {
  const Index M = x.size();
  const Index N = static_cast<Index>(x_hat.size());
  Vector u(2 * M * N);
  for (Index n = 0; n < N; ++n) {
    u.segment(n * M, M) = x - x_hat[n];
    u.segment((N + n) * M, M) = y - y_hat[n];
  }
  return u;
}

void add_pred(ErrorMoments& m, int i, const Vector& u) {
  m.pred_sum[i] += u;
  const Matrix outer = u * u.transpose();
  m.pred_outer[i] += outer;
  m.pred_outer_sq[i] += outer.cwiseAbs2();
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

Matrix se_from(const Matrix& sum, const Matrix& sum_sq, int runs) {
  const double r = runs;
  const Matrix mean = sum / r;
  const Matrix var = (sum_sq / r - mean.cwiseAbs2()).cwiseMax(0.0) * (r / std::max(1.0, r - 1.0));
  return (var / r).cwiseSqrt();
}

}  // namespace

double to_db(double x) {
  if (std::isnan(x) || x < 0) return nan();
  if (x == 0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(x);
}

void ErrorMoments::merge(const ErrorMoments& o) {
  runs += o.runs;
  for (std::size_t i = 0; i < pred_sum.size(); ++i) {
    pred_sum[i] += o.pred_sum[i];
    pred_outer[i] += o.pred_outer[i];
    pred_outer_sq[i] += o.pred_outer_sq[i];
  }
  for (std::size_t i = 0; i < filt_sum.size(); ++i) {
    filt_sum[i] += o.filt_sum[i];
    filt_sq[i] += o.filt_sq[i];
  }
}

Vector ErrorMoments::pred_mean(int i) const { return pred_sum[i] / runs; }
Matrix ErrorMoments::pred_second_moment(int i) const { return pred_outer[i] / runs; }
Matrix ErrorMoments::pred_second_moment_se(int i) const { return se_from(pred_outer[i], pred_outer_sq[i], runs); }
Vector ErrorMoments::pred_mean_se(int i) const {
  return se_from(pred_sum[i], pred_outer[i].diagonal(), runs);
}
Vector ErrorMoments::filt_mean(int i) const { return filt_sum[i] / runs; }
Vector ErrorMoments::filt_mean_se(int i) const { return se_from(filt_sum[i], filt_sq[i], runs); }

MseReport theory_report(const ModelSpec& spec, const GainSchedule& schedule, int horizon) {
  check_schedule_matches(schedule, spec);
  if (horizon < 0) throw ParameterError("horizon must be >= 0");
  if (horizon > schedule.horizon()) {
    throw ConfigurationError("schedule covers " + std::to_string(schedule.horizon()) + " steps, " +
                             std::to_string(horizon) + " requested");
  }
  const CkfCovariances ckf = ckf_covariances(spec, horizon);
  MseReport r;
  r.model_hash = schedule.model_hash;
  for (int i = 0; i < horizon; ++i) {
    r.theory_cikf_total.push_back(schedule.theory_mse_total[i]);
    r.theory_cikf_per_agent.push_back(schedule.theory_mse_per_agent[i]);
    r.theory_ckf.push_back(ckf.trace_next(i));
  }
  r.emp_cikf.assign(static_cast<std::size_t>(horizon), nan());
  r.emp_cikf_total = r.emp_cikf;
  r.emp_ckf = r.emp_cikf;
  return r;
}

MonteCarloResult run_montecarlo(const ModelSpec& spec, const GainSchedule& schedule, int runs, int horizon,
                                std::uint64_t base_seed, const MonteCarloOptions& options) {
  if (runs < 0) throw ParameterError("runs must be >= 0");
  MonteCarloResult out;
  out.report = theory_report(spec, schedule, horizon);
  out.report.runs = runs;
  out.report.seed = base_seed;
  if (runs == 0) return out;

  const PseudoModel pm = build_pseudo_model(spec);
  const CkfCovariances ckf = ckf_covariances(spec, horizon);
  const Index dim = 2 * static_cast<Index>(spec.M) * spec.N;

  const int block_count = (runs + kRunBlock - 1) / kRunBlock;
  std::vector<BlockSums> blocks(static_cast<std::size_t>(block_count));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (int b = next++; b < block_count; b = next++) {
      try {
        BlockSums s;
        s.cikf.assign(static_cast<std::size_t>(horizon), 0.0);
        s.ckf.assign(static_cast<std::size_t>(horizon), 0.0);
        if (options.collect_moments) s.moments = empty_moments(dim, horizon);
        const int end = std::min(runs, (b + 1) * kRunBlock);
        for (int k = b * kRunBlock; k < end; ++k) {
          const Trajectory traj = simulate_truth(spec, horizon, base_seed + static_cast<std::uint64_t>(k));
          const CkfResult c = ckf_run(spec, ckf, traj);
          NetworkEstimate est = cikf_init(spec, pm);
          if (s.moments) add_pred(*s.moments, 0, joint_error(traj.x[0], pm.G * traj.x[0], est.x_pred, est.y_pred));
          for (int i = 0; i < horizon; ++i) {
            est = cikf_step(est, schedule, pm, spec.A, traj.z[i]);
            const Vector& x_next = traj.x[i + 1];
            double sum = 0;
            for (const auto& xh : est.x_pred) sum += (x_next - xh).squaredNorm();
            s.cikf[i] += sum;
            s.ckf[i] += (x_next - c.x_pred[i]).squaredNorm();
            if (s.moments) {
              add_pred(*s.moments, i + 1, joint_error(x_next, pm.G * x_next, est.x_pred, est.y_pred));
              const Vector uf = joint_error(traj.x[i], pm.G * traj.x[i], est.x_filt, est.y_filt);
              s.moments->filt_sum[i] += uf;
              s.moments->filt_sq[i] += uf.cwiseAbs2();
            }
          }
          if (s.moments) ++s.moments->runs;
        }
        blocks[b] = std::move(s);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = block_count;
      }
    }
  };

  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, block_count);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> cikf(static_cast<std::size_t>(horizon), 0.0), ckf_sum = cikf;
  for (const auto& s : blocks) {
    for (int i = 0; i < horizon; ++i) {
      cikf[i] += s.cikf[i];
      ckf_sum[i] += s.ckf[i];
    }
    if (s.moments) {
      if (!out.moments) {
        out.moments = *s.moments;
      } else {
        out.moments->merge(*s.moments);
      }
    }
  }
  auto& r = out.report;
  for (int i = 0; i < horizon; ++i) {
    r.emp_cikf_total[i] = cikf[i] / runs;
    r.emp_cikf[i] = cikf[i] / runs / spec.N;
    r.emp_ckf[i] = ckf_sum[i] / runs;
  }
  return out;
}

SeriesSummary summarize_series(const std::vector<double>& linear) {
  SeriesSummary s;
  if (linear.empty()) {
    s.steady_state = s.steady_state_db = nan();
    return s;
  }
  const std::size_t w = std::min<std::size_t>(kSteadyStateWindow, linear.size());
  double sum = 0;
  for (std::size_t k = linear.size() - w; k < linear.size(); ++k) sum += linear[k];
  s.steady_state = sum / static_cast<double>(w);
  s.steady_state_db = to_db(s.steady_state);
  for (std::size_t i = 1; i < linear.size(); ++i) {
    if (std::abs(to_db(linear[i]) - to_db(linear[i - 1])) < kConvergenceDb) {
      s.convergence_step = static_cast<int>(i);
      break;
    }
  }
  return s;
}

ComparisonSummary mse_compare(const MseReport& report) {
  ComparisonSummary c;
  c.horizon = report.horizon();
  c.runs = report.runs;
  c.provisional = c.horizon < kSteadyStateWindow;
  c.theory_cikf = summarize_series(report.theory_cikf_per_agent);
  c.theory_ckf = summarize_series(report.theory_ckf);
  c.emp_cikf = summarize_series(report.emp_cikf);
  c.emp_ckf = summarize_series(report.emp_ckf);
  c.gap_theory_db = c.theory_cikf.steady_state_db - c.theory_ckf.steady_state_db;
  c.gap_emp_db = c.emp_cikf.steady_state_db - c.emp_ckf.steady_state_db;
  return c;
}

}  // namespace cikf
