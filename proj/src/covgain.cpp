#include "cikf/covgain.hpp"

#include "cikf/error.hpp"

#include <string>

namespace cikf {
namespace {

auto blk(const Matrix& x, int n, int l, Index m) { return x.block(n * m, l * m, m, m); }

Matrix all_blocks(const Matrix& block, int count) {
  const Index m = block.rows();
  Matrix out(m * count, m * count);
  for (int n = 0; n < count; ++n)
    for (int l = 0; l < count; ++l) out.block(n * m, l * m, m, m) = block;
  return out;
}

void expect_square(const Matrix& x, Index dim, const char* name) {
  if (x.rows() != dim || x.cols() != dim) {
    throw StructuralError(std::string(name) + " has the wrong dimension for this model");
  }
}

void inflate_diagonal(Matrix& x, double rel) {
  x.diagonal().array() += rel * x.diagonal().maxCoeff();
}

}  // namespace

BlockSparse StepGains::consensus_matrix(const std::vector<std::vector<int>>& neighborhoods) const {
  const int count = agent_count();
  const Index m = count ? innovation.front().rows() : 0;
  BlockSparse bc(count, m);
  for (int n = 0; n < count; ++n) {
    const auto& nb = neighborhoods[static_cast<std::size_t>(n)];
    for (std::size_t j = 0; j < nb.size(); ++j) {
      const Matrix& b = consensus[n][j];
      bc.add(n, nb[j], -b);
      bc.add(n, n, b);
    }
  }
  return bc;
}

Matrix StepGains::agent_row(int n) const {
  const auto& cons = consensus[static_cast<std::size_t>(n)];
  const Index m = innovation[n].rows();
  Matrix row(m, m * static_cast<Index>(cons.size() + 1));
  for (std::size_t j = 0; j < cons.size(); ++j) row.middleCols(static_cast<Index>(j) * m, m) = cons[j];
  row.rightCols(m) = innovation[n];
  return row;
}

CovarianceState init_covariances(const Matrix& Sigma0, const Matrix& G, int N) {
  if (Sigma0.rows() != Sigma0.cols() || G.rows() != Sigma0.rows() || G.cols() != G.rows()) {
    throw StructuralError("init_covariances: Sigma0 and G must be square and conformal");
  }
  if (N < 1) throw StructuralError("init_covariances: N must be >= 1");
  CovarianceState cov;
  cov.step = 0;
  cov.Sigma_pred = all_blocks(Sigma0, N);
  cov.P_pred = all_blocks(symmetrized(G * Sigma0 * G), N);
  cov.Pi_pred = all_blocks(Sigma0 * G, N);
  return cov;
}

InnovationCovariances innovation_covariances(const CovarianceState& cov, const PseudoModel& pm,
                                             const GraphSpectrum& graph, int n, bool require_state_part) {
  const Index M = pm.M;
  if (n < 0 || n >= pm.N) throw StructuralError("agent index out of range");
  const auto& nb = graph.neighborhoods[static_cast<std::size_t>(n)];
  const Index d = static_cast<Index>(nb.size());

  const Matrix& P = cov.P_pred;
  const Matrix& Pi = cov.Pi_pred;
  const Matrix Pnn = blk(P, n, n, M);
  const Matrix Pinn = blk(Pi, n, n, M);
  const Matrix Snn = blk(cov.Sigma_pred, n, n, M);
  const Matrix& Ht = pm.H_til_n[n];
  const Matrix& Hc = pm.H_check_n[n];

  InnovationCovariances ic;
  ic.Sigma_y_nu.resize(M, (d + 1) * M);
  ic.Sigma_nu_til.resize((d + 1) * M, (d + 1) * M);

  for (Index q = 0; q < d; ++q) {
    const int lq = nb[q];
    ic.Sigma_y_nu.middleCols(q * M, M) = Pnn - blk(P, n, lq, M);
    for (Index s = 0; s < d; ++s) {
      const int ls = nb[s];
      ic.Sigma_nu_til.block(q * M, s * M, M, M) = Pnn - blk(P, n, ls, M) - blk(P, lq, n, M) + blk(P, lq, ls, M);
    }
    // E[(e^n - e^lq)(H_til e^n + H_check eps^n)^T]
    Matrix cross = (Pnn - blk(P, lq, n, M)) * Ht.transpose() +
                   (Pinn - blk(Pi, n, lq, M)).transpose() * Hc.transpose();
    ic.Sigma_nu_til.block(q * M, d * M, M, M) = cross;
    ic.Sigma_nu_til.block(d * M, q * M, M, M) = cross.transpose();
  }
  ic.Sigma_y_nu.rightCols(M) = Pnn * Ht.transpose() + Pinn.transpose() * Hc.transpose();
  ic.Sigma_nu_til.bottomRightCorner(M, M) = Ht * Pnn * Ht.transpose() + Ht * Pinn.transpose() * Hc.transpose() +
                                            Hc * Pinn * Ht.transpose() + Hc * Snn * Hc.transpose() +
                                            pm.H_bar_n[n];
  ic.Sigma_nu_til = symmetrized(ic.Sigma_nu_til);

  if (cov.has_pseudo_filter()) {
    const Matrix Gnn = blk(cov.Gamma, n, n, M);
    ic.Sigma_x_nu = Snn * pm.G - Gnn;
    ic.Sigma_nu = symmetrized(pm.G * Snn * pm.G - pm.G * Gnn - Gnn.transpose() * pm.G + blk(cov.P_filt, n, n, M));
  } else if (require_state_part) {
    throw SequencingError("state innovation covariances need Gamma and P_filt of the same step");
  }
  return ic;
}

void apply_pseudo_gains(CovarianceState& cov, const PseudoModel& pm, const BlockSparse& consensus,
                        const BlockDiag& innovation) {
  const Index MN = static_cast<Index>(pm.M) * pm.N;
  expect_square(cov.P_pred, MN, "P_pred");
  expect_square(cov.Sigma_pred, MN, "Sigma_pred");
  expect_square(cov.Pi_pred, MN, "Pi_pred");

  BlockSparse fb = BlockSparse::identity(pm.N, pm.M);
  fb -= consensus;
  fb -= to_block_sparse(innovation * pm.D_til_H);
  const BlockDiag bi_check = innovation * pm.D_check_H;

  cov.Gamma = fb.right_multiply_transpose(cov.Pi_pred) - bi_check.right_multiply_transpose(cov.Sigma_pred);

  Matrix P = fb.right_multiply_transpose(fb.left_multiply(cov.P_pred));
  P += bi_check.right_multiply_transpose(bi_check.left_multiply(cov.Sigma_pred));
  const Matrix x = bi_check.right_multiply_transpose(fb.left_multiply(cov.Pi_pred.transpose()));
  P -= x;
  P -= x.transpose();
  for (int n = 0; n < pm.N; ++n) {
    const Matrix& b = innovation.block(n);
    P.block(n * pm.M, n * pm.M, pm.M, pm.M) += b * pm.H_bar_n[n] * b.transpose();
  }
  cov.P_filt = symmetrized(P);
}

void apply_state_gains(CovarianceState& cov, const PseudoModel& pm, const BlockDiag& state_gain) {
  if (!cov.has_pseudo_filter()) throw SequencingError("state gains need Gamma and P_filt of the same step");
  std::vector<Matrix> fk_blocks;
  fk_blocks.reserve(static_cast<std::size_t>(pm.N));
  for (int n = 0; n < pm.N; ++n) {
    fk_blocks.push_back(Matrix::Identity(pm.M, pm.M) - state_gain.block(n) * pm.G);
  }
  const BlockDiag fk(std::move(fk_blocks));

  const Matrix fk_gamma = fk.left_multiply(cov.Gamma);
  Matrix S = fk.right_multiply_transpose(fk.left_multiply(cov.Sigma_pred));
  S += state_gain.right_multiply_transpose(state_gain.left_multiply(cov.P_filt));
  const Matrix y = state_gain.right_multiply_transpose(fk_gamma);
  S += y;
  S += y.transpose();
  cov.Sigma_filt = symmetrized(S);
  cov.Pi_filt = fk_gamma + state_gain.left_multiply(cov.P_filt);
}

StepDesign step_gains_and_filter_covariances(CovarianceState& cov, const PseudoModel& pm,
                                             const GraphSpectrum& graph) {
  if (graph.agent_count() != pm.N) throw StructuralError("graph and model disagree on N");
  StepDesign out;
  auto& g = out.gains;
  g.consensus.resize(static_cast<std::size_t>(pm.N));
  g.innovation.resize(static_cast<std::size_t>(pm.N));
  g.state.resize(static_cast<std::size_t>(pm.N));
  cov.Gamma.resize(0, 0);
  cov.P_filt.resize(0, 0);
  cov.Sigma_filt.resize(0, 0);
  cov.Pi_filt.resize(0, 0);

  const Index M = pm.M;
  for (int n = 0; n < pm.N; ++n) {
    const InnovationCovariances ic = innovation_covariances(cov, pm, graph, n);
    const RightSolve rs = solve_right_psd(ic.Sigma_y_nu, ic.Sigma_nu_til, kGainSolveCutoff);
    if (rs.truncated) ++out.diagnostics.truncated_consensus_solves;
    const Index d = static_cast<Index>(graph.neighborhoods[n].size());
    g.consensus[n].reserve(static_cast<std::size_t>(d));
    for (Index j = 0; j < d; ++j) g.consensus[n].push_back(rs.gain.middleCols(j * M, M));
    g.innovation[n] = rs.gain.rightCols(M);
  }
  apply_pseudo_gains(cov, pm, g.consensus_matrix(graph.neighborhoods), g.innovation_matrix());

  for (int n = 0; n < pm.N; ++n) {
    const InnovationCovariances ic = innovation_covariances(cov, pm, graph, n, true);
    const RightSolve rs = solve_right_psd(ic.Sigma_x_nu, ic.Sigma_nu, kGainSolveCutoff);
    if (rs.truncated) ++out.diagnostics.truncated_state_solves;
    g.state[n] = rs.gain;
  }
  apply_state_gains(cov, pm, g.state_matrix());
  return out;
}

CovarianceState predict_covariance_update(const CovarianceState& filt, const PseudoModel& pm,
                                          const ModelSpec& spec) {
  if (!filt.has_pseudo_filter() || !filt.has_state_filter()) {
    throw SequencingError("prediction update needs the filter covariances of the step");
  }
  const int N = pm.N;
  const BlockDiag a_til = BlockDiag::repeat(pm.A_til, N);
  const BlockDiag a_blk = BlockDiag::repeat(spec.A, N);
  const bool has_check = !pm.A_check.isZero(0.0);

  CovarianceState next;
  next.step = filt.step + 1;

  Matrix P = a_til.right_multiply_transpose(a_til.left_multiply(filt.P_filt));
  Matrix Pi = a_til.right_multiply_transpose(a_blk.left_multiply(filt.Pi_filt));
  if (has_check) {
    const BlockDiag a_chk = BlockDiag::repeat(pm.A_check, N);
    P += a_chk.right_multiply_transpose(a_chk.left_multiply(filt.Sigma_filt));
    const Matrix cross = a_til.right_multiply_transpose(a_chk.left_multiply(filt.Pi_filt));
    P += cross;
    P += cross.transpose();
    Pi += a_chk.right_multiply_transpose(a_blk.left_multiply(filt.Sigma_filt));
  }
  add_to_all_blocks(P, symmetrized(pm.G * spec.V * pm.G));
  add_to_all_blocks(Pi, spec.V * pm.G);
  next.P_pred = symmetrized(P);
  next.Pi_pred = std::move(Pi);

  Matrix S = a_blk.right_multiply_transpose(a_blk.left_multiply(filt.Sigma_filt));
  add_to_all_blocks(S, spec.V);
  next.Sigma_pred = symmetrized(S);
  return next;
}

ScheduleResult precompute_schedule(const ModelSpec& spec, int horizon, const ScheduleOptions& options) {
  if (horizon < 1) throw ParameterError("horizon must be >= 1");
  spec.check_structure();
  const PseudoModel pm = build_pseudo_model(spec);
  const GraphSpectrum graph = laplacian_spectrum(spec.adjacency);

  ScheduleResult out;
  auto& sched = out.schedule;
  sched.M = spec.M;
  sched.N = spec.N;
  sched.model_hash = model_hash(spec);
  sched.neighborhoods = graph.neighborhoods;

  const double reg = options.design_regularization;
  if (!(reg >= 0.0)) throw ParameterError("design_regularization must be >= 0");
  CovarianceState cov = init_covariances(spec.Sigma0, pm.G, spec.N);
  CovarianceState shadow;
  if (reg > 0.0) shadow = cov;
  for (int i = 0; i < horizon; ++i) {
    cov.step = i;
    StepDesign design;
    if (reg > 0.0) {
      inflate_diagonal(shadow.P_pred, reg);
      inflate_diagonal(shadow.Sigma_pred, reg);
      design = step_gains_and_filter_covariances(shadow, pm, graph);
      shadow = predict_covariance_update(shadow, pm, spec);
      apply_pseudo_gains(cov, pm, design.gains.consensus_matrix(graph.neighborhoods),
                         design.gains.innovation_matrix());
      apply_state_gains(cov, pm, design.gains.state_matrix());
    } else {
      design = step_gains_and_filter_covariances(cov, pm, graph);
    }
    CovarianceState next = predict_covariance_update(cov, pm, spec);

    const double tr_next = next.Sigma_pred.trace();
    sched.steps.push_back(std::move(design.gains));
    sched.diagnostics.push_back(design.diagnostics);
    sched.theory_mse_total.push_back(tr_next);
    sched.theory_mse_per_agent.push_back(tr_next / spec.N);
    out.traces.push_back({i, cov.P_pred.trace(), cov.Sigma_pred.trace(), cov.P_filt.trace(),
                          cov.Sigma_filt.trace(), tr_next});
    if (options.keep_states) out.states.push_back(cov);
    if (i == horizon - 1) out.last_step = cov;
    cov = std::move(next);
  }
  out.final_prediction = std::move(cov);
  return out;
}

void check_schedule_matches(const GainSchedule& schedule, const ModelSpec& spec) {
  if (schedule.M != spec.M || schedule.N != spec.N) {
    throw ConfigurationError("schedule dimensions do not match the model");
  }
  if (schedule.model_hash != model_hash(spec)) {
    throw ConfigurationError("schedule was designed for a different model (hash mismatch)");
  }
}

}  // namespace cikf
