#include "cikf/capacity.hpp"
#include "cikf/cli.hpp"
#include "cikf/covgain.hpp"
#include "cikf/error.hpp"
#include "cikf/filter.hpp"
#include "cikf/harness.hpp"
#include "cikf/io.hpp"
#include "cikf/model.hpp"
#include "cikf/pseudo.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace cikf;

PYBIND11_MODULE(_cikf, m) {
  m.doc() = "Consensus+innovations Kalman filter core";
  m.attr("__version__") = version();

  static auto* cikf_error = new py::exception<Error>(m, "CikfError");  // outlives interpreter teardown
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(*cikf_error, (e.kind() + ": " + e.what()).c_str());
    }
  });

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_static("paper", &ModelParams::paper)
      .def_static("desk", &ModelParams::desk)
      .def_static("from_preset", &ModelParams::from_preset)
      .def_readwrite("M", &ModelParams::M)
      .def_readwrite("N", &ModelParams::N)
      .def_readwrite("M_n", &ModelParams::M_n)
      .def_readwrite("a_norm", &ModelParams::a_norm)
      .def_readwrite("v_norm", &ModelParams::v_norm)
      .def_readwrite("r_norm", &ModelParams::r_norm)
      .def_readwrite("sigma0_norm", &ModelParams::sigma0_norm)
      .def_readwrite("edges", &ModelParams::edges)
      .def_readwrite("dyn_degree", &ModelParams::dyn_degree);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init<>())
      .def_readwrite("M", &ModelSpec::M)
      .def_readwrite("N", &ModelSpec::N)
      .def_readwrite("M_n", &ModelSpec::M_n)
      .def_readwrite("A", &ModelSpec::A)
      .def_readwrite("V", &ModelSpec::V)
      .def_readwrite("H_n", &ModelSpec::H_n)
      .def_readwrite("R_n", &ModelSpec::R_n)
      .def_readwrite("x0_mean", &ModelSpec::x0_mean)
      .def_readwrite("Sigma0", &ModelSpec::Sigma0)
      .def_readwrite("adjacency", &ModelSpec::adjacency)
      .def("check_structure", &ModelSpec::check_structure)
      .def("__eq__", [](const ModelSpec& a, const ModelSpec& b) { return a == b; });

  m.def("generate_paper_model", &generate_paper_model, py::arg("params"), py::arg("seed"));
  m.def("model_hash", &model_hash);
  m.def("save_model", [](const std::filesystem::path& p, const ModelSpec& s) { save_model(p, s); });
  m.def("load_model", &load_model);

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("lambda2", &ValidationReport::lambda2)
      .def("ok", &ValidationReport::ok)
      .def_property_readonly("checks", [](const ValidationReport& r) {
        py::list out;
        for (const auto& c : r.checks) {
          out.append(py::dict(py::arg("name") = c.name, py::arg("assumption") = c.assumption,
                              py::arg("passed") = c.passed, py::arg("detail") = c.detail));
        }
        return out;
      });
  m.def("validate_model", &validate_model);

  py::class_<PseudoModel>(m, "PseudoModel")
      .def_readonly("G", &PseudoModel::G)
      .def_readonly("G_dag", &PseudoModel::G_dag)
      .def_readonly("I_til", &PseudoModel::I_til)
      .def_readonly("A_til", &PseudoModel::A_til)
      .def_readonly("A_check", &PseudoModel::A_check)
      .def_readonly("H_til_n", &PseudoModel::H_til_n)
      .def_readonly("H_check_n", &PseudoModel::H_check_n)
      .def_readonly("rank_G", &PseudoModel::rank_G);
  m.def("build_pseudo_model", &build_pseudo_model);

  py::class_<GainSchedule>(m, "GainSchedule")
      .def_readonly("M", &GainSchedule::M)
      .def_readonly("N", &GainSchedule::N)
      .def_readonly("model_hash", &GainSchedule::model_hash)
      .def_readonly("neighborhoods", &GainSchedule::neighborhoods)
      .def_readonly("theory_mse_total", &GainSchedule::theory_mse_total)
      .def_readonly("theory_mse_per_agent", &GainSchedule::theory_mse_per_agent)
      .def_property_readonly("horizon", &GainSchedule::horizon)
      .def("consensus_gain", [](const GainSchedule& s, int i, int n, int j) { return s.steps.at(i).consensus.at(n).at(j); })
      .def("innovation_gain", [](const GainSchedule& s, int i, int n) { return s.steps.at(i).innovation.at(n); })
      .def("state_gain", [](const GainSchedule& s, int i, int n) { return s.steps.at(i).state.at(n); })
      .def("save", [](const GainSchedule& s, const std::filesystem::path& p) { save_schedule(p, s); })
      .def_static("load", &load_schedule);
  m.def("precompute_schedule", [](const ModelSpec& s, int horizon) { return precompute_schedule(s, horizon).schedule; },
        py::arg("spec"), py::arg("horizon"));

  m.def("simulate_truth", [](const ModelSpec& s, int horizon, std::uint64_t seed) {
    const Trajectory t = simulate_truth(s, horizon, seed);
    return py::dict(py::arg("x") = t.x, py::arg("z") = t.z, py::arg("v") = t.v, py::arg("r") = t.r);
  });

  py::class_<MseReport>(m, "MseReport")
      .def_readonly("theory_cikf_total", &MseReport::theory_cikf_total)
      .def_readonly("theory_cikf_per_agent", &MseReport::theory_cikf_per_agent)
      .def_readonly("theory_ckf", &MseReport::theory_ckf)
      .def_readonly("emp_cikf", &MseReport::emp_cikf)
      .def_readonly("emp_cikf_total", &MseReport::emp_cikf_total)
      .def_readonly("emp_ckf", &MseReport::emp_ckf)
      .def_readonly("runs", &MseReport::runs)
      .def_readonly("seed", &MseReport::seed)
      .def_readonly("model_hash", &MseReport::model_hash)
      .def_property_readonly("horizon", &MseReport::horizon)
      .def("to_csv", [](const MseReport& r) { return report_to_csv(r); })
      .def("to_json", [](const MseReport& r) { return report_to_json(r); })
      .def_static("from_json", &report_from_json);
  m.def(
      "run_montecarlo",
      [](const ModelSpec& s, const GainSchedule& g, int runs, int horizon, std::uint64_t seed, int threads) {
        MonteCarloOptions o;
        o.threads = threads;
        py::gil_scoped_release release;
        return run_montecarlo(s, g, runs, horizon, seed, o).report;
      },
      py::arg("spec"), py::arg("schedule"), py::arg("runs"), py::arg("horizon"), py::arg("seed"),
      py::arg("threads") = 0);

  py::class_<SeriesSummary>(m, "SeriesSummary")
      .def_readonly("steady_state", &SeriesSummary::steady_state)
      .def_readonly("steady_state_db", &SeriesSummary::steady_state_db)
      .def_readonly("convergence_step", &SeriesSummary::convergence_step);
  py::class_<ComparisonSummary>(m, "ComparisonSummary")
      .def_readonly("theory_cikf", &ComparisonSummary::theory_cikf)
      .def_readonly("theory_ckf", &ComparisonSummary::theory_ckf)
      .def_readonly("emp_cikf", &ComparisonSummary::emp_cikf)
      .def_readonly("emp_ckf", &ComparisonSummary::emp_ckf)
      .def_readonly("gap_theory_db", &ComparisonSummary::gap_theory_db)
      .def_readonly("gap_emp_db", &ComparisonSummary::gap_emp_db)
      .def_readonly("provisional", &ComparisonSummary::provisional);
  m.def("mse_compare", &mse_compare);

  py::class_<StabilityReport>(m, "StabilityReport")
      .def_readonly("rho_F_til", &StabilityReport::rho_F_til)
      .def_readonly("rho_F", &StabilityReport::rho_F)
      .def_readonly("contraction_norm", &StabilityReport::contraction_norm)
      .def("stable", &StabilityReport::stable);
  m.def(
      "stability_check",
      [](const ModelSpec& s, const GainSchedule& g, int step) {
        check_schedule_matches(g, s);
        return stability_check(g.steps.at(step), g.neighborhoods, build_pseudo_model(s), s);
      },
      py::arg("spec"), py::arg("schedule"), py::arg("step"));

  py::class_<CapacityEstimate>(m, "CapacityEstimate")
      .def_readonly("C_lower", &CapacityEstimate::C_lower)
      .def_readonly("lambda_1", &CapacityEstimate::lambda_1)
      .def_readonly("lambda_m", &CapacityEstimate::lambda_m)
      .def_readonly("achieved_norm", &CapacityEstimate::achieved_norm)
      .def_readonly("unbounded", &CapacityEstimate::unbounded)
      .def_readonly("alpha", &CapacityEstimate::alpha)
      .def_readonly("beta", &CapacityEstimate::beta)
      .def_readonly("gamma", &CapacityEstimate::gamma);
  m.def(
      "capacity_lower_bound",
      [](const ModelSpec& s, int budget, const std::string& family) {
        return capacity_lower_bound(build_pseudo_model(s), laplacian_spectrum(s.adjacency), budget,
                                    gain_family_from_string(family));
      },
      py::arg("spec"), py::arg("budget") = 400, py::arg("family") = "consensus");

  m.def("run_command", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
