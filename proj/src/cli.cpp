#include "cikf/cli.hpp"

#include "cikf/capacity.hpp"
#include "cikf/covgain.hpp"
#include "cikf/error.hpp"
#include "cikf/harness.hpp"
#include "cikf/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>

namespace cikf {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Hash of the options that influence results; output paths and thread
// counts are left out.
std::uint64_t config_hash(const CLI::App& sub) {
  std::string text = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (opt->check_name("--output") || opt->check_name("--threads") || opt->count() == 0) continue;
    text += '\n' + name + '=';
    for (const auto& v : opt->results()) text += v + ';';
  }
  return fnv1a(text);
}

json finite(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& suffix) {
  std::filesystem::path out = p;
  out.replace_extension();
  out += suffix;
  return out;
}

struct Options {
  std::string preset = "desk";
  std::uint64_t seed = 0;
  int horizon = 30;
  int runs = 1000;
  int threads = 0;
  int budget = 400;
  std::string family = "consensus";
  std::string format = "all";
  std::string output;
  std::string model_path;
  std::string schedule_path;
  std::string report_path;
  std::optional<int> M, N, edges;
  std::optional<double> a_norm;
};

FileMeta meta_for(const Options& o, std::uint64_t config_hash, std::uint64_t model) {
  return FileMeta{version(), o.seed, config_hash, model};
}

int cmd_generate(const Options& o, std::uint64_t cfg, std::ostream& out) {
  ModelParams p = ModelParams::from_preset(o.preset);
  if (o.M) p.M = *o.M;
  if (o.N) p.N = *o.N;
  if (o.edges) p.edges = *o.edges;
  if (o.a_norm) p.a_norm = *o.a_norm;
  const ModelSpec spec = generate_paper_model(p, o.seed);
  const std::string path = o.output.empty() ? "model.json" : o.output;
  save_model(path, spec, meta_for(o, cfg, model_hash(spec)));
  out << "wrote " << path << " (M=" << spec.M << ", N=" << spec.N << ", ||A||_2=" << spectral_norm(spec.A)
      << ", model_hash=" << to_hex(model_hash(spec)) << ")\n";
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelSpec spec = load_model(o.model_path);
  const ValidationReport rep = validate_model(spec);
  for (const auto& c : rep.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " (Assumption " << c.assumption << "): " << c.detail << '\n';
  }
  if (const AssumptionCheck* f = rep.first_failure()) {
    err << "error: assumption: Assumption " << f->assumption << " (" << f->name << ") failed: " << f->detail << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_gains(const Options& o, std::uint64_t cfg, std::ostream& out) {
  const ModelSpec spec = load_model(o.model_path);
  const ScheduleResult res = precompute_schedule(spec, o.horizon);
  const std::string path = o.output.empty() ? "schedule.bin" : o.output;
  save_schedule(path, res.schedule);
  const auto csv = with_suffix(path, ".theory.csv");
  const MseReport rep = theory_report(spec, res.schedule, o.horizon);
  export_results(rep, csv, ReportFormat::Csv, meta_for(o, cfg, res.schedule.model_hash));
  out << "wrote " << path << " and " << csv.string() << " (horizon " << o.horizon
      << ", final theory MSE per agent " << to_db(res.schedule.theory_mse_per_agent.back()) << " dB)\n";
  return kExitOk;
}

int cmd_capacity(const Options& o, std::uint64_t cfg, std::ostream& out) {
  const ModelSpec spec = load_model(o.model_path);
  const PseudoModel pm = build_pseudo_model(spec);
  const GraphSpectrum graph = laplacian_spectrum(spec.adjacency);
  const ScheduleResult res = precompute_schedule(spec, o.horizon);
  const StabilityReport st =
      stability_check(res.schedule.steps.back(), res.schedule.neighborhoods, pm, spec, &res.last_step);
  const CapacityEstimate cap = capacity_lower_bound(pm, graph, o.budget, gain_family_from_string(o.family));

  json j;
  const FileMeta m = meta_for(o, cfg, model_hash(spec));
  j["meta"] = {{"version", m.version}, {"seed", m.seed}, {"config_hash", to_hex(m.config_hash)},
               {"model_hash", to_hex(m.model_hash)}};
  j["stability"] = {{"step", o.horizon - 1},
                    {"rho_F_til", st.rho_F_til},
                    {"rho_F", st.rho_F},
                    {"contraction_norm", st.contraction_norm},
                    {"noise_norm_til", finite(st.noise_norm_til.value_or(NAN))},
                    {"noise_norm", finite(st.noise_norm.value_or(NAN))},
                    {"stable", st.stable()}};
  j["capacity"] = {{"C_lower", cap.C_lower},
                   {"unbounded", cap.unbounded},
                   {"lambda_1", cap.lambda_1},
                   {"lambda_m", cap.lambda_m},
                   {"achieved_norm", cap.achieved_norm},
                   {"family", to_string(cap.family)},
                   {"argmax_params", {{"alpha", cap.alpha}, {"beta", cap.beta}, {"gamma", cap.gamma}}},
                   {"evaluations", cap.evaluations},
                   {"A_norm", spectral_norm(spec.A)}};
  const std::string path = o.output.empty() ? "capacity.json" : o.output;
  write_text_file(path, j.dump(1));
  out << "wrote " << path << " (rho(F_til)=" << st.rho_F_til << ", rho(F)=" << st.rho_F << ", C_lower=" << cap.C_lower
      << (cap.unbounded ? " [unbounded]" : "") << ")\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, std::uint64_t cfg, std::ostream& out) {
  const ModelSpec spec = load_model(o.model_path);
  const GainSchedule sched = load_schedule(o.schedule_path);
  check_schedule_matches(sched, spec);
  const int horizon = o.horizon > 0 ? std::min(o.horizon, sched.horizon()) : sched.horizon();
  MonteCarloOptions mc;
  mc.threads = o.threads;
  const MonteCarloResult res = run_montecarlo(spec, sched, o.runs, horizon, o.seed, mc);
  const FileMeta meta = meta_for(o, cfg, sched.model_hash);
  const std::filesystem::path stem = o.output.empty() ? "mse" : o.output;
  const bool all = o.format == "all";
  if (!all) report_format_from_string(o.format);
  std::vector<std::string> written;
  if (all || o.format == "csv") {
    export_results(res.report, with_suffix(stem, ".csv"), ReportFormat::Csv, meta);
    written.push_back(with_suffix(stem, ".csv").string());
  }
  if (all || o.format == "json") {
    export_results(res.report, with_suffix(stem, ".json"), ReportFormat::Json, meta);
    written.push_back(with_suffix(stem, ".json").string());
  }
  if (all) {
    write_text_file(with_suffix(stem, ".svg"), report_to_svg(res.report, "CIKF vs CKF prediction MSE"));
    written.push_back(with_suffix(stem, ".svg").string());
  }
  const ComparisonSummary s = mse_compare(res.report);
  out << "wrote";
  for (const auto& w : written) out << ' ' << w;
  out << " (runs " << o.runs << ", gap theory " << s.gap_theory_db << " dB, empirical " << s.gap_emp_db << " dB)\n";
  return kExitOk;
}

int cmd_compare(const Options& o, std::uint64_t cfg, std::ostream& out) {
  const MseReport rep = import_results(o.report_path);
  const ComparisonSummary s = mse_compare(rep);
  const std::string text = summary_to_json(s, FileMeta{version(), rep.seed, cfg, rep.model_hash});
  if (o.output.empty()) {
    out << text << '\n';
  } else {
    write_text_file(o.output, text);
    out << "wrote " << o.output << " (gap theory " << s.gap_theory_db << " dB)\n";
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consensus+innovations Kalman filter toolkit", "cikf"};
  app.set_config("--config", "", "TOML/INI file with option values (command-line flags take precedence)");
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1, 1);

  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--threads", o.threads, "Worker threads (speed only, never results)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", o.seed, "Random seed");
  };

  auto* gen = app.add_subcommand("generate", "Generate a random model with the reference statistics");
  add_common(gen);
  gen->add_option("--preset", o.preset, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
  gen->add_option("--M", o.M, "Override the field dimension");
  gen->add_option("--N", o.N, "Override the number of agents");
  gen->add_option("--edges", o.edges, "Override the number of graph edges");
  gen->add_option("--a-norm", o.a_norm, "Override ||A||_2");
  gen->add_option("-o,--output", o.output, "Model file (default model.json)");

  auto* val = app.add_subcommand("validate", "Check the model assumptions");
  val->add_option("model", o.model_path)->required()->check(CLI::ExistingFile);

  auto* gains = app.add_subcommand("gains", "Precompute the gain schedule");
  add_common(gains);
  gains->add_option("model", o.model_path)->required()->check(CLI::ExistingFile);
  gains->add_option("--horizon", o.horizon)->check(CLI::PositiveNumber);
  gains->add_option("-o,--output", o.output, "Schedule file (default schedule.bin)");

  auto* cap = app.add_subcommand("capacity", "Stability check of the designed gains and capacity lower bound");
  add_common(cap);
  cap->add_option("model", o.model_path)->required()->check(CLI::ExistingFile);
  cap->add_option("--horizon", o.horizon)->check(CLI::PositiveNumber);
  cap->add_option("--budget", o.budget, "Structured-gain evaluations")->check(CLI::PositiveNumber);
  cap->add_option("--family", o.family)->check(CLI::IsMember({"consensus", "sparsity"}));
  cap->add_option("-o,--output", o.output, "JSON report (default capacity.json)");

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo MSE of CIKF and the centralized filter");
  add_common(sim);
  sim->add_option("model", o.model_path)->required()->check(CLI::ExistingFile);
  sim->add_option("schedule", o.schedule_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--runs", o.runs)->check(CLI::NonNegativeNumber);
  sim->add_option("--horizon", o.horizon, "Steps (default and cap: schedule horizon)")->check(CLI::PositiveNumber);
  sim->add_option("--format", o.format, "csv, json or all")->check(CLI::IsMember({"csv", "json", "all"}));
  sim->add_option("-o,--output", o.output, "Output stem (default mse)");
  bool horizon_given = false;

  auto* cmp = app.add_subcommand("compare", "Steady-state gaps and convergence of an MSE report");
  cmp->add_option("report", o.report_path, "JSON report from simulate")->required()->check(CLI::ExistingFile);
  cmp->add_option("-o,--output", o.output, "Summary file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    horizon_given = sim->count("--horizon") > 0;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: usage: " << msg << '\n';
    return kExitUsage;
  }

  if (*sim && !horizon_given) o.horizon = 0;
  CLI::App* chosen = app.get_subcommands().front();
  const std::uint64_t cfg = config_hash(*chosen);

  try {
    if (chosen == gen) return cmd_generate(o, cfg, out);
    if (chosen == val) return cmd_validate(o, out, err);
    if (chosen == gains) return cmd_gains(o, cfg, out);
    if (chosen == cap) return cmd_capacity(o, cfg, out);
    if (chosen == sim) return cmd_simulate(o, cfg, out);
    return cmd_compare(o, cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
  }
  return kExitFailure;
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace cikf
