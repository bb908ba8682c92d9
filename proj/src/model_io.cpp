#include "cikf/io.hpp"

#include "cikf/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef CIKF_VERSION
#define CIKF_VERSION "0.0.0"
#endif

namespace cikf {
namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j, Index cols_if_empty, const std::string& name) {
  if (!j.is_array()) throw StructuralError(name + " must be a nested array");
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, cols_if_empty);
  const Index cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Index>(j[r].size()) != cols) {
      throw StructuralError(name + " rows must all have the same length");
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) throw StructuralError(std::string("model file is missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

const char* version() { return CIKF_VERSION; }

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t from_hex(const std::string& s) {
  try {
    return std::stoull(s, nullptr, 16);
  } catch (const std::exception&) {
    throw StructuralError("invalid hex value '" + s + "'");
  }
}

std::string model_to_json(const ModelSpec& spec, const std::optional<FileMeta>& meta) {
  spec.check_structure();
  json j;
  if (meta) {
    j["meta"] = {{"version", meta->version},
                 {"seed", meta->seed},
                 {"config_hash", to_hex(meta->config_hash)},
                 {"model_hash", to_hex(model_hash(spec))}};
  }
  j["M"] = spec.M;
  j["N"] = spec.N;
  j["M_n"] = spec.M_n;
  j["A"] = matrix_json(spec.A);
  j["V"] = matrix_json(spec.V);
  j["H_n"] = json::array();
  for (const auto& H : spec.H_n) j["H_n"].push_back(matrix_json(H));
  j["R_n"] = json::array();
  for (const auto& R : spec.R_n) j["R_n"].push_back(matrix_json(R));
  j["x0_mean"] = std::vector<double>(spec.x0_mean.data(), spec.x0_mean.data() + spec.x0_mean.size());
  j["Sigma0"] = matrix_json(spec.Sigma0);
  json adj = json::array();
  for (Index r = 0; r < spec.adjacency.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < spec.adjacency.cols(); ++c) row.push_back(spec.adjacency(r, c));
    adj.push_back(std::move(row));
  }
  j["adjacency"] = std::move(adj);
  // max_digits10 round-trip is nlohmann's default for doubles
  return j.dump(1);
}

ModelSpec model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("model file is not valid JSON: ") + e.what());
  }
  ModelSpec spec;
  try {
    spec.M = field(j, "M").get<int>();
    spec.N = field(j, "N").get<int>();
    spec.M_n = field(j, "M_n").get<std::vector<int>>();
    spec.A = matrix_from(field(j, "A"), spec.M, "A");
    spec.V = matrix_from(field(j, "V"), spec.M, "V");
    for (const auto& H : field(j, "H_n")) spec.H_n.push_back(matrix_from(H, spec.M, "H_n"));
    std::size_t n = 0;
    for (const auto& R : field(j, "R_n")) {
      const Index dim = n < spec.M_n.size() ? spec.M_n[n] : 0;
      spec.R_n.push_back(matrix_from(R, dim, "R_n"));
      ++n;
    }
    const auto x0 = field(j, "x0_mean").get<std::vector<double>>();
    spec.x0_mean = Eigen::Map<const Vector>(x0.data(), static_cast<Index>(x0.size()));
    spec.Sigma0 = matrix_from(field(j, "Sigma0"), spec.M, "Sigma0");
    const auto& adj = field(j, "adjacency");
    spec.adjacency = AdjacencyMatrix::Zero(static_cast<Index>(adj.size()),
                                           adj.empty() ? 0 : static_cast<Index>(adj[0].size()));
    for (Index r = 0; r < spec.adjacency.rows(); ++r) {
      if (static_cast<Index>(adj[r].size()) != spec.adjacency.cols()) {
        throw StructuralError("adjacency rows must all have the same length");
      }
      for (Index c = 0; c < spec.adjacency.cols(); ++c) spec.adjacency(r, c) = adj[r][c].get<int>();
    }
  } catch (const json::exception& e) {
    throw StructuralError(std::string("model file has a malformed field: ") + e.what());
  }
  spec.check_structure();
  return spec;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_model(const std::filesystem::path& path, const ModelSpec& spec, const std::optional<FileMeta>& meta) {
  write_text_file(path, model_to_json(spec, meta));
}

ModelSpec load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

std::optional<FileMeta> load_model_meta(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.contains("meta")) return std::nullopt;
  const auto& m = j.at("meta");
  FileMeta meta;
  meta.version = m.value("version", "");
  meta.seed = m.value("seed", std::uint64_t{0});
  meta.config_hash = from_hex(m.value("config_hash", "0"));
  meta.model_hash = from_hex(m.value("model_hash", "0"));
  return meta;
}

std::uint64_t params_hash(const ModelParams& p) {
  // same FNV-1a constants as model_hash, over the decimal rendering
  std::ostringstream os;
  os.precision(17);
  os << p.M << ',' << p.N << ',' << p.M_n << ',' << p.a_norm << ',' << p.v_norm << ',' << p.r_norm << ','
     << p.sigma0_norm << ',' << p.edges << ',' << p.dyn_degree;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cikf
