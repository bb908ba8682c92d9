#include "cikf/error.hpp"
#include "cikf/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cikf {
namespace {

using nlohmann::json;

struct Column {
  const char* name;
  const std::vector<double>* values;
};

std::vector<double> db_of(const std::vector<double>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(to_db(x));
  return out;
}

json meta_json(const FileMeta& m) {
  return {{"version", m.version},
          {"seed", m.seed},
          {"config_hash", to_hex(m.config_hash)},
          {"model_hash", to_hex(m.model_hash)}};
}

// nlohmann writes non-finite doubles as null
json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

std::vector<double> numbers_from(const json& j, const char* key) {
  std::vector<double> out;
  if (!j.contains(key)) throw StructuralError(std::string("report is missing '") + key + "'");
  for (const auto& x : j.at(key)) {
    out.push_back(x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>());
  }
  return out;
}

json series_json(const SeriesSummary& s) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"steady_state", num(s.steady_state)},
          {"steady_state_db", num(s.steady_state_db)},
          {"convergence_step", s.convergence_step}};
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw ParameterError("unknown format '" + s + "' (expected csv or json)");
}

std::string report_to_csv(const MseReport& r, const std::optional<FileMeta>& meta) {
  std::ostringstream os;
  os.precision(17);
  if (meta) {
    os << "# version=" << meta->version << " seed=" << meta->seed << " config_hash=" << to_hex(meta->config_hash)
       << " model_hash=" << to_hex(meta->model_hash) << " runs=" << r.runs << '\n';
  }
  const auto t_cikf_db = db_of(r.theory_cikf_per_agent);
  const auto t_ckf_db = db_of(r.theory_ckf);
  const auto e_cikf_db = db_of(r.emp_cikf);
  const auto e_ckf_db = db_of(r.emp_ckf);
  const Column cols[] = {{"theory_cikf_total", &r.theory_cikf_total},
                         {"theory_cikf_per_agent", &r.theory_cikf_per_agent},
                         {"theory_ckf", &r.theory_ckf},
                         {"emp_cikf", &r.emp_cikf},
                         {"emp_ckf", &r.emp_ckf},
                         {"theory_cikf_db", &t_cikf_db},
                         {"theory_ckf_db", &t_ckf_db},
                         {"emp_cikf_db", &e_cikf_db},
                         {"emp_ckf_db", &e_ckf_db}};
  os << "step";
  for (const auto& c : cols) os << ',' << c.name;
  os << '\n';
  for (int i = 0; i < r.horizon(); ++i) {
    os << i;
    for (const auto& c : cols) os << ',' << (*c.values)[i];
    os << '\n';
  }
  return os.str();
}

std::string report_to_json(const MseReport& r, const std::optional<FileMeta>& meta) {
  json j;
  if (meta) j["meta"] = meta_json(*meta);
  j["runs"] = r.runs;
  j["seed"] = r.seed;
  j["model_hash"] = to_hex(r.model_hash);
  j["step"] = json::array();
  for (int i = 0; i < r.horizon(); ++i) j["step"].push_back(i);
  j["theory_cikf_total"] = numbers(r.theory_cikf_total);
  j["theory_cikf_per_agent"] = numbers(r.theory_cikf_per_agent);
  j["theory_ckf"] = numbers(r.theory_ckf);
  j["emp_cikf"] = numbers(r.emp_cikf);
  j["emp_cikf_total"] = numbers(r.emp_cikf_total);
  j["emp_ckf"] = numbers(r.emp_ckf);
  j["theory_cikf_db"] = numbers(db_of(r.theory_cikf_per_agent));
  j["theory_ckf_db"] = numbers(db_of(r.theory_ckf));
  j["emp_cikf_db"] = numbers(db_of(r.emp_cikf));
  j["emp_ckf_db"] = numbers(db_of(r.emp_ckf));
  return j.dump(1);
}

MseReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("report is not valid JSON: ") + e.what());
  }
  MseReport r;
  try {
    r.runs = j.at("runs").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.model_hash = from_hex(j.at("model_hash").get<std::string>());
    r.theory_cikf_total = numbers_from(j, "theory_cikf_total");
    r.theory_cikf_per_agent = numbers_from(j, "theory_cikf_per_agent");
    r.theory_ckf = numbers_from(j, "theory_ckf");
    r.emp_cikf = numbers_from(j, "emp_cikf");
    r.emp_cikf_total = numbers_from(j, "emp_cikf_total");
    r.emp_ckf = numbers_from(j, "emp_ckf");
  } catch (const json::exception& e) {
    throw StructuralError(std::string("report has a malformed field: ") + e.what());
  }
  const std::size_t T = r.theory_cikf_total.size();
  for (const auto* v : {&r.theory_cikf_per_agent, &r.theory_ckf, &r.emp_cikf, &r.emp_cikf_total, &r.emp_ckf}) {
    if (v->size() != T) throw StructuralError("report series have different lengths");
  }
  return r;
}

std::string summary_to_json(const ComparisonSummary& s, const std::optional<FileMeta>& meta) {
  json j;
  if (meta) j["meta"] = meta_json(*meta);
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  j["horizon"] = s.horizon;
  j["runs"] = s.runs;
  j["provisional"] = s.provisional;
  j["gap_theory_db"] = num(s.gap_theory_db);
  j["gap_emp_db"] = num(s.gap_emp_db);
  j["theory_cikf"] = series_json(s.theory_cikf);
  j["theory_ckf"] = series_json(s.theory_ckf);
  j["emp_cikf"] = series_json(s.emp_cikf);
  j["emp_ckf"] = series_json(s.emp_ckf);
  return j.dump(1);
}

std::string report_to_svg(const MseReport& r, const std::string& title) {
  struct Curve {
    const char* label;
    std::vector<double> db;
    const char* color;
    const char* dash;
  };
  const Curve curves[] = {{"CIKF theory", db_of(r.theory_cikf_per_agent), "#1f77b4", ""},
                          {"CKF theory", db_of(r.theory_ckf), "#d62728", ""},
                          {"CIKF empirical", db_of(r.emp_cikf), "#1f77b4", "6,4"},
                          {"CKF empirical", db_of(r.emp_ckf), "#d62728", "6,4"}};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : curves) {
    for (double v : c.db) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double W = 720, H = 440, L = 70, R = 170, T = 40, B = 50;
  const int steps = std::max(1, r.horizon() - 1);
  auto px = [&](double i) { return L + (W - L - R) * i / steps; };
  auto py = [&](double v) { return T + (H - T - B) * (hi - v) / (hi - lo); };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
     << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R) << "\" height=\"" << (H - T - B)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5;
    os << "<line x1=\"" << L << "\" x2=\"" << (W - R) << "\" y1=\"" << py(v) << "\" y2=\"" << py(v)
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << (L - 6) << "\" y=\"" << (py(v) + 4) << "\" text-anchor=\"end\">" << v << "</text>\n";
  }
  const int xticks = std::min(steps, 10);
  for (int k = 0; k <= xticks; ++k) {
    const int i = static_cast<int>(std::lround(static_cast<double>(steps) * k / xticks));
    os << "<text x=\"" << px(i) << "\" y=\"" << (H - B + 18) << "\" text-anchor=\"middle\">" << i << "</text>\n";
  }
  os << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"" << (H - 10) << "\" text-anchor=\"middle\">step i</text>\n";
  os << "<text transform=\"translate(18," << (T + (H - T - B) / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">MSE (dB)</text>\n";

  int row = 0;
  for (const auto& c : curves) {
    std::ostringstream pts;
    pts.precision(6);
    int n = 0;
    for (std::size_t i = 0; i < c.db.size(); ++i) {
      if (!std::isfinite(c.db[i])) continue;
      pts << px(static_cast<double>(i)) << ',' << py(c.db[i]) << ' ';
      ++n;
    }
    if (n == 0) continue;
    os << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"2\"";
    if (*c.dash) os << " stroke-dasharray=\"" << c.dash << '"';
    os << " points=\"" << pts.str() << "\"/>\n";
    const double ly = T + 16 + 20 * row++;
    os << "<line x1=\"" << (W - R + 12) << "\" x2=\"" << (W - R + 40) << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << c.color << "\" stroke-width=\"2\"";
    if (*c.dash) os << " stroke-dasharray=\"" << c.dash << '"';
    os << "/>\n<text x=\"" << (W - R + 46) << "\" y=\"" << (ly + 4) << "\">" << c.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void export_results(const MseReport& report, const std::filesystem::path& path, ReportFormat format,
                    const std::optional<FileMeta>& meta) {
  write_text_file(path, format == ReportFormat::Csv ? report_to_csv(report, meta) : report_to_json(report, meta));
}

MseReport import_results(const std::filesystem::path& path) { return report_from_json(read_text_file(path)); }

}  // namespace cikf
