#include "cikf/filter.hpp"

#include "cikf/error.hpp"
#include "cikf/io.hpp"

#include <sstream>
#include <string>

namespace cikf {
namespace {

Vector sample(std::mt19937_64& rng, const Vector& mean, const Matrix& factor) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(factor.cols());
  for (Index k = 0; k < w.size(); ++k) w(k) = normal(rng);
  return mean + factor * w;
}

void append_rows(std::ostringstream& os, int step, int agent, const Vector& v, const char* series) {
  for (Index k = 0; k < v.size(); ++k) os << step << ',' << agent << ',' << k << ',' << v(k) << ',' << series << '\n';
}

}  // namespace

Trajectory simulate_truth(const ModelSpec& spec, int horizon, std::uint64_t seed) {
  if (horizon < 0) throw ParameterError("horizon must be >= 0");
  spec.check_structure();
  const Matrix f0 = psd_factor(spec.Sigma0);
  const Matrix fv = psd_factor(spec.V);
  std::vector<Matrix> fr;
  for (const auto& R : spec.R_n) fr.push_back(psd_factor(R));

  auto rng_x0 = make_stream(seed, 0);
  auto rng_v = make_stream(seed, 1);
  std::vector<std::mt19937_64> rng_r;
  for (int n = 0; n < spec.N; ++n) rng_r.push_back(make_stream(seed, 2 + static_cast<std::uint64_t>(n)));

  Trajectory t;
  const Vector zero_m = Vector::Zero(spec.M);
  t.x.push_back(sample(rng_x0, spec.x0_mean, f0));
  for (int i = 0; i < horizon; ++i) {
    std::vector<Vector> z, r;
    for (int n = 0; n < spec.N; ++n) {
      r.push_back(sample(rng_r[n], Vector::Zero(spec.M_n[n]), fr[n]));
      z.push_back(spec.H_n[n] * t.x[i] + r.back());
    }
    t.z.push_back(std::move(z));
    t.r.push_back(std::move(r));
    t.v.push_back(sample(rng_v, zero_m, fv));
    t.x.push_back(spec.A * t.x[i] + t.v.back());
  }
  return t;
}

Vector NetworkEstimate::stack(const std::vector<Vector>& per_agent) {
  Index size = 0;
  for (const auto& v : per_agent) size += v.size();
  Vector out(size);
  Index off = 0;
  for (const auto& v : per_agent) {
    out.segment(off, v.size()) = v;
    off += v.size();
  }
  return out;
}

NetworkEstimate cikf_init(const ModelSpec& spec, const PseudoModel& pm) {
  NetworkEstimate est;
  est.step = 0;
  const Vector y0 = pm.G * spec.x0_mean;
  est.x_pred.assign(static_cast<std::size_t>(spec.N), spec.x0_mean);
  est.y_pred.assign(static_cast<std::size_t>(spec.N), y0);
  return est;
}

AgentOutput cikf_agent_update(int n, const AgentInput& in, const StepGains& gains, const PseudoModel& pm,
                              const Matrix& A) {
  const auto& cons = gains.consensus[static_cast<std::size_t>(n)];
  if (cons.size() != in.neighbor_y_pred.size()) {
    throw ConfigurationError("agent " + std::to_string(n) + ": neighbour count does not match its gains");
  }
  const Vector& y = *in.y_pred;
  const Vector& x = *in.x_pred;

  AgentOutput out;
  out.y_filt = y;
  for (std::size_t j = 0; j < cons.size(); ++j) out.y_filt += cons[j] * (*in.neighbor_y_pred[j] - y);
  const Vector z_til = pm.HtRinv_n[n] * *in.z;
  out.y_filt += gains.innovation[n] * (z_til - pm.H_til_n[n] * y - pm.H_check_n[n] * x);
  out.x_filt = x + gains.state[n] * (out.y_filt - pm.G * x);

  out.y_pred = pm.A_til * out.y_filt + pm.A_check * out.x_filt;
  out.x_pred = A * out.x_filt;
  return out;
}

NetworkEstimate cikf_step(const NetworkEstimate& est, const GainSchedule& schedule, const PseudoModel& pm,
                          const Matrix& A, const std::vector<Vector>& z) {
  if (schedule.M != pm.M || schedule.N != pm.N) {
    throw ConfigurationError("schedule dimensions do not match the model");
  }
  if (est.step < 0 || est.step >= schedule.horizon()) {
    throw SequencingError("no gains for step " + std::to_string(est.step) + " (schedule horizon " +
                          std::to_string(schedule.horizon()) + ")");
  }
  if (static_cast<int>(z.size()) != pm.N || est.agent_count() != pm.N) {
    throw StructuralError("cikf_step: need one observation and one estimate per agent");
  }
  const StepGains& gains = schedule.steps[static_cast<std::size_t>(est.step)];

  NetworkEstimate next;
  next.step = est.step + 1;
  next.y_pred.resize(static_cast<std::size_t>(pm.N));
  next.x_pred.resize(static_cast<std::size_t>(pm.N));
  next.y_filt.resize(static_cast<std::size_t>(pm.N));
  next.x_filt.resize(static_cast<std::size_t>(pm.N));
  for (int n = 0; n < pm.N; ++n) {
    AgentInput in;
    in.y_pred = &est.y_pred[n];
    in.x_pred = &est.x_pred[n];
    in.z = &z[n];
    for (int l : schedule.neighborhoods[n]) in.neighbor_y_pred.push_back(&est.y_pred[l]);
    AgentOutput out = cikf_agent_update(n, in, gains, pm, A);
    next.y_filt[n] = std::move(out.y_filt);
    next.x_filt[n] = std::move(out.x_filt);
    next.y_pred[n] = std::move(out.y_pred);
    next.x_pred[n] = std::move(out.x_pred);
  }
  return next;
}

CikfFilter::CikfFilter(const ModelSpec& spec, const GainSchedule& schedule)
    : spec_(spec), schedule_(schedule), pm_(build_pseudo_model(spec)) {
  check_schedule_matches(schedule, spec);
  est_ = cikf_init(spec_, pm_);
}

const NetworkEstimate& CikfFilter::step(const std::vector<Vector>& z) {
  est_ = cikf_step(est_, schedule_, pm_, spec_.A, z);
  return est_;
}

void CikfFilter::reset() { est_ = cikf_init(spec_, pm_); }

CkfCovariances ckf_covariances(const ModelSpec& spec, int horizon) {
  if (horizon < 0) throw ParameterError("horizon must be >= 0");
  spec.check_structure();
  const Matrix H = spec.stacked_H();
  const Matrix R = spec.stacked_R();
  const Index M = spec.M;

  CkfCovariances c;
  c.Sigma_pred.push_back(symmetrized(spec.Sigma0));
  for (int i = 0; i < horizon; ++i) {
    const Matrix& S = c.Sigma_pred.back();
    const Matrix Sy = symmetrized(H * S * H.transpose() + R);
    Eigen::LLT<Matrix> llt(Sy);
    if (llt.info() != Eigen::Success) throw NumericalError("centralized innovation covariance is singular");
    const Matrix K = llt.solve(H * S).transpose();
    const Matrix IKH = Matrix::Identity(M, M) - K * H;
    // Joseph form keeps the update symmetric and PSD
    Matrix Sf = symmetrized(IKH * S * IKH.transpose() + K * R * K.transpose());
    c.Sigma_pred.push_back(symmetrized(spec.A * Sf * spec.A.transpose() + spec.V));
    c.gain.push_back(K);
    c.Sigma_filt.push_back(std::move(Sf));
  }
  return c;
}

CkfResult ckf_run(const ModelSpec& spec, const CkfCovariances& cov, const Trajectory& traj) {
  if (cov.horizon() < traj.horizon()) throw SequencingError("centralized covariances are shorter than the run");
  const Matrix H = spec.stacked_H();
  CkfResult out;
  Vector x = spec.x0_mean;
  for (int i = 0; i < traj.horizon(); ++i) {
    const Vector z = NetworkEstimate::stack(traj.z[i]);
    out.x_filt.push_back(x + cov.gain[i] * (z - H * x));
    x = spec.A * out.x_filt.back();
    out.x_pred.push_back(x);
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ostringstream os;
  os.precision(17);
  os << "step,agent,component,value,series\n";
  for (std::size_t i = 0; i < traj.x.size(); ++i) {
    const int step = static_cast<int>(i);
    append_rows(os, step, -1, traj.x[i], "x");
    if (i < traj.z.size()) {
      for (std::size_t n = 0; n < traj.z[i].size(); ++n) append_rows(os, step, static_cast<int>(n), traj.z[i][n], "z");
    }
  }
  write_text_file(path, os.str());
}

void write_estimates_csv(const std::filesystem::path& path, const std::vector<NetworkEstimate>& history) {
  std::ostringstream os;
  os.precision(17);
  os << "step,agent,component,value,series\n";
  for (const auto& est : history) {
    for (int n = 0; n < est.agent_count(); ++n) {
      append_rows(os, est.step, n, est.y_pred[n], "y_pred");
      append_rows(os, est.step, n, est.x_pred[n], "x_pred");
      if (!est.y_filt.empty()) {
        append_rows(os, est.step - 1, n, est.y_filt[n], "y_filt");
        append_rows(os, est.step - 1, n, est.x_filt[n], "x_filt");
      }
    }
  }
  write_text_file(path, os.str());
}

}  // namespace cikf
