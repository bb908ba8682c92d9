#include "cikf/error.hpp"
#include "cikf/filter.hpp"
#include "cikf/harness.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace cikf;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) != std::isnan(b[i])) return false;
    if (!std::isnan(a[i]) && a[i] != b[i]) return false;
  }
  return true;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "cikf_test_harness";
  std::filesystem::create_directories(dir);
  return dir;
}

// Lag-k sample correlation of the scalar series of each run.
double lag_correlation(const std::vector<std::vector<double>>& runs, int i, int k) {
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& r : runs) {
    sxy += r[i] * r[i + k];
    sxx += r[i] * r[i];
    syy += r[i + k] * r[i + k];
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("noise-free model: theory and empirical MSE are both zero") {
  ModelSpec s = oracle::small_model(6, 4, 4, 3);
  s.Sigma0.setZero();
  s.V.setZero();
  const GainSchedule g = precompute_schedule(s, 8).schedule;
  const MseReport r = run_montecarlo(s, g, 20, 8, 1).report;
  for (int i = 0; i < 8; ++i) {
    CHECK(r.theory_cikf_total[i] == 0.0);
    CHECK(r.theory_ckf[i] == 0.0);
    CHECK(r.emp_cikf[i] == 0.0);
    CHECK(r.emp_ckf[i] == 0.0);
  }
}

TEST_CASE("scalar Monte-Carlo matches the first-step variances") {
  const ModelSpec s = oracle::scalar_model(0.9, 0.25, 1.0, 1.0, 1.0);
  const GainSchedule g = precompute_schedule(s, 1).schedule;
  MonteCarloOptions o;
  o.collect_moments = true;
  const MonteCarloResult res = run_montecarlo(s, g, 10000, 1, 42, o);
  REQUIRE(res.moments.has_value());
  const ErrorMoments& m = *res.moments;
  CHECK(m.runs == 10000);
  // filtered state error variance 0.5, predicted 0.655
  const double filt_var = m.filt_sq[0](0) / m.runs;
  CHECK(std::abs(filt_var - 0.5) < 0.03 * 0.5);
  CHECK(std::abs(res.report.emp_cikf[0] - 0.655) < 0.03 * 0.655);
  CHECK(std::abs(res.report.emp_ckf[0] - 0.655) < 0.03 * 0.655);
  CHECK(m.pred_second_moment(0)(0, 0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(m.filt_mean(0)(0)) < 4 * m.filt_mean_se(0)(0));
}

TEST_CASE("results do not depend on the thread count") {
  const ModelSpec s = oracle::small_model(6, 4, 4, 5);
  const GainSchedule g = precompute_schedule(s, 6).schedule;
  MonteCarloOptions one, many;
  one.threads = 1;
  one.collect_moments = many.collect_moments = true;
  many.threads = 5;
  const MonteCarloResult a = run_montecarlo(s, g, 300, 6, 9, one);
  const MonteCarloResult b = run_montecarlo(s, g, 300, 6, 9, many);
  CHECK(same_bits(a.report.emp_cikf, b.report.emp_cikf));
  CHECK(same_bits(a.report.emp_ckf, b.report.emp_ckf));
  CHECK(same_bits(a.report.emp_cikf_total, b.report.emp_cikf_total));
  for (int i = 0; i <= 6; ++i) CHECK(a.moments->pred_outer[i] == b.moments->pred_outer[i]);
  const MonteCarloResult c = run_montecarlo(s, g, 300, 6, 10, one);
  CHECK_FALSE(same_bits(a.report.emp_cikf, c.report.emp_cikf));
}

TEST_CASE("report bookkeeping") {
  const ModelSpec s = oracle::small_model(6, 4, 4, 5);
  const GainSchedule g = precompute_schedule(s, 6).schedule;
  const MseReport t = theory_report(s, g, 6);
  CHECK(t.runs == 0);
  CHECK(t.horizon() == 6);
  CHECK(std::isnan(t.emp_cikf[0]));
  CHECK(t.theory_cikf_per_agent[2] == doctest::Approx(t.theory_cikf_total[2] / s.N));
  CHECK_THROWS_AS(theory_report(s, g, 7), ConfigurationError);
  CHECK_THROWS_AS(run_montecarlo(s, g, -1, 6, 0), ParameterError);
  CHECK_THROWS_AS(run_montecarlo(oracle::small_model(6, 4, 4, 6), g, 1, 6, 0), ConfigurationError);
  const MseReport e = run_montecarlo(s, g, 64, 6, 0).report;
  for (int i = 0; i < 6; ++i) CHECK(e.emp_cikf_total[i] == doctest::Approx(e.emp_cikf[i] * s.N));
}

TEST_CASE("dB conversion and series summaries") {
  CHECK(to_db(100.0) == doctest::Approx(20.0));
  CHECK(to_db(0.0) == -std::numeric_limits<double>::infinity());
  CHECK(std::isnan(to_db(-1.0)));
  CHECK(std::isnan(to_db(kNaN)));

  const SeriesSummary s = summarize_series({10, 5, 4, 4, 4, 4, 4, 4});
  CHECK(s.steady_state == doctest::Approx(4.0));
  CHECK(s.steady_state_db == doctest::Approx(to_db(4.0)));
  CHECK(s.convergence_step == 3);
  CHECK(summarize_series({1, 2, 4, 8}).convergence_step == -1);
  // mean of the last five linear values
  CHECK(summarize_series({100, 1, 2, 3, 4, 5}).steady_state == doctest::Approx(3.0));
}

TEST_CASE("comparison: identical series give a zero gap, CKF never beats CIKF") {
  MseReport r;
  r.theory_cikf_per_agent = r.theory_ckf = {5, 4, 3, 3, 3, 3};
  r.theory_cikf_total = {20, 16, 12, 12, 12, 12};
  r.emp_cikf = r.emp_ckf = r.emp_cikf_total = std::vector<double>(6, kNaN);
  ComparisonSummary c = mse_compare(r);
  CHECK(c.gap_theory_db == 0.0);
  CHECK(std::isnan(c.gap_emp_db));
  CHECK_FALSE(c.provisional);

  const ModelSpec s = oracle::small_model(6, 4, 4, 2);
  const GainSchedule g = precompute_schedule(s, 20).schedule;
  c = mse_compare(run_montecarlo(s, g, 200, 20, 3).report);
  CHECK(c.gap_theory_db >= 0.0);
  CHECK(c.theory_cikf.convergence_step > 0);
  CHECK(std::isfinite(c.gap_emp_db));
  CHECK(mse_compare(theory_report(s, g, 3)).provisional);
}

TEST_CASE("CSV and JSON exports") {
  SUBCASE("empty report gives only the header") {
    const std::string csv = report_to_csv(MseReport{});
    CHECK(csv ==
          "step,theory_cikf_total,theory_cikf_per_agent,theory_ckf,emp_cikf,emp_ckf,theory_cikf_db,theory_ckf_db,"
          "emp_cikf_db,emp_ckf_db\n");
  }
  SUBCASE("dB columns are consistent with the linear ones") {
    const ModelSpec s = oracle::small_model(6, 4, 4, 2);
    const GainSchedule g = precompute_schedule(s, 4).schedule;
    const MseReport r = run_montecarlo(s, g, 64, 4, 3).report;
    std::istringstream in(report_to_csv(r, FileMeta{version(), 3, 0x12, r.model_hash}));
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# version=", 0) == 0);
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
      std::vector<double> v;
      std::stringstream ls(line);
      for (std::string cell; std::getline(ls, cell, ',');) v.push_back(std::stod(cell));
      REQUIRE(v.size() == 10);
      CHECK(v[6] == doctest::Approx(10 * std::log10(v[2])).epsilon(1e-12));
      CHECK(v[7] == doctest::Approx(10 * std::log10(v[3])).epsilon(1e-12));
      CHECK(v[8] == doctest::Approx(10 * std::log10(v[4])).epsilon(1e-12));
      CHECK(v[9] == doctest::Approx(10 * std::log10(v[5])).epsilon(1e-12));
      CHECK(v[1] == r.theory_cikf_total[rows]);  // 17 significant digits round trip
      ++rows;
    }
    CHECK(rows == 4);
  }
  SUBCASE("JSON round trip is bit exact, NaN included") {
    const ModelSpec s = oracle::small_model(6, 4, 4, 2);
    const GainSchedule g = precompute_schedule(s, 5).schedule;
    for (const MseReport& r : {run_montecarlo(s, g, 70, 5, 8).report, theory_report(s, g, 5)}) {
      const MseReport back = report_from_json(report_to_json(r));
      CHECK(same_bits(back.theory_cikf_total, r.theory_cikf_total));
      CHECK(same_bits(back.theory_cikf_per_agent, r.theory_cikf_per_agent));
      CHECK(same_bits(back.theory_ckf, r.theory_ckf));
      CHECK(same_bits(back.emp_cikf, r.emp_cikf));
      CHECK(same_bits(back.emp_cikf_total, r.emp_cikf_total));
      CHECK(same_bits(back.emp_ckf, r.emp_ckf));
      CHECK(back.runs == r.runs);
      CHECK(back.seed == r.seed);
      CHECK(back.model_hash == r.model_hash);
      export_results(r, temp_dir() / "r.json", ReportFormat::Json);
      CHECK(same_bits(import_results(temp_dir() / "r.json").emp_cikf, r.emp_cikf));
    }
    CHECK_THROWS_AS(report_from_json("{"), StructuralError);
    CHECK_THROWS_AS(report_from_json("{\"runs\": 1}"), StructuralError);
    CHECK_THROWS_AS(report_format_from_string("xml"), ParameterError);
  }
  SUBCASE("SVG chart") {
    const ModelSpec s = oracle::small_model(6, 4, 4, 2);
    const GainSchedule g = precompute_schedule(s, 5).schedule;
    const std::string svg = report_to_svg(run_montecarlo(s, g, 64, 5, 8).report);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
}

TEST_CASE("a single agent's pseudo-innovations are white") {
  const ModelSpec s = oracle::scalar_model(1.1, 0.5, 1.0, 0.8, 2.0);
  const int T = 6, runs = 4000;
  const GainSchedule g = precompute_schedule(s, T).schedule;
  const PseudoModel pm = build_pseudo_model(s);
  std::vector<std::vector<double>> nu(runs);
  for (int k = 0; k < runs; ++k) {
    const Trajectory t = simulate_truth(s, T, 1000 + k);
    CikfFilter f(s, g);
    for (int i = 0; i < T; ++i) {
      const NetworkEstimate& e = f.estimate();
      const Vector zt = pseudo_observation(s.H_n[0], s.R_n[0], t.z[i][0]);
      nu[k].push_back((zt - pm.H_til_n[0] * e.y_pred[0] - pm.H_check_n[0] * e.x_pred[0])(0));
      f.step(t.z[i]);
    }
  }
  // correlation estimates have standard error about 1/sqrt(runs)
  for (int i = 0; i + 1 < T; ++i) {
    CHECK(std::abs(lag_correlation(nu, i, 1)) < 4.0 / std::sqrt(runs));
  }
}
