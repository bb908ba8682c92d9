#include "cikf/covgain.hpp"
#include "cikf/error.hpp"
#include "cikf/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace cikf {
namespace {

static_assert(std::endian::native == std::endian::little, "schedule files are written little-endian");

constexpr char kMagic[8] = {'C', 'I', 'K', 'F', 'S', 'C', 'H', '1'};
constexpr std::uint32_t kFormat = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  template <class T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void matrix(const Matrix& m) {
    pod(static_cast<std::int32_t>(m.rows()));
    pod(static_cast<std::int32_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) pod(m(r, c));
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path.string() + "' for reading");
  }
  template <class T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw IoError("'" + path_.string() + "' is truncated");
    return v;
  }
  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (!in_) throw IoError("'" + path_.string() + "' is truncated");
  }
  int count(const char* what) {
    const auto v = pod<std::int32_t>();
    if (v < 0 || v > (1 << 24)) throw StructuralError(std::string("schedule file has invalid ") + what);
    return v;
  }
  Matrix matrix() {
    const int rows = count("matrix rows");
    const int cols = count("matrix cols");
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = pod<double>();
    return m;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace

void save_schedule(const std::filesystem::path& path, const GainSchedule& s) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kFormat);
  const std::string ver = version();
  w.pod(static_cast<std::int32_t>(ver.size()));
  w.bytes(ver.data(), ver.size());
  w.pod(s.model_hash);
  w.pod(static_cast<std::int32_t>(s.M));
  w.pod(static_cast<std::int32_t>(s.N));
  w.pod(static_cast<std::int32_t>(s.horizon()));
  for (const auto& nb : s.neighborhoods) {
    w.pod(static_cast<std::int32_t>(nb.size()));
    for (int l : nb) w.pod(static_cast<std::int32_t>(l));
  }
  for (int i = 0; i < s.horizon(); ++i) {
    const StepGains& g = s.steps[i];
    for (int n = 0; n < s.N; ++n) {
      for (const Matrix& b : g.consensus[n]) w.matrix(b);
      w.matrix(g.innovation[n]);
      w.matrix(g.state[n]);
    }
    const GainDiagnostics d = i < static_cast<int>(s.diagnostics.size()) ? s.diagnostics[i] : GainDiagnostics{};
    w.pod(static_cast<std::int32_t>(d.truncated_consensus_solves));
    w.pod(static_cast<std::int32_t>(d.truncated_state_solves));
    w.pod(s.theory_mse_total[i]);
    w.pod(s.theory_mse_per_agent[i]);
  }
  w.finish();
}

GainSchedule load_schedule(const std::filesystem::path& path) {
  Reader r(path);
  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw StructuralError("'" + path.string() + "' is not a schedule file");
  }
  if (r.pod<std::uint32_t>() != kFormat) throw StructuralError("unsupported schedule file format");
  std::string ver(static_cast<std::size_t>(r.count("version length")), '\0');
  r.bytes(ver.data(), ver.size());

  GainSchedule s;
  s.model_hash = r.pod<std::uint64_t>();
  s.M = r.count("M");
  s.N = r.count("N");
  const int horizon = r.count("horizon");
  s.neighborhoods.resize(static_cast<std::size_t>(s.N));
  for (auto& nb : s.neighborhoods) {
    nb.resize(static_cast<std::size_t>(r.count("degree")));
    for (int& l : nb) {
      l = r.pod<std::int32_t>();
      if (l < 0 || l >= s.N) throw StructuralError("schedule file has an invalid neighbour index");
    }
  }
  for (int i = 0; i < horizon; ++i) {
    StepGains g;
    g.consensus.resize(static_cast<std::size_t>(s.N));
    for (int n = 0; n < s.N; ++n) {
      for (std::size_t j = 0; j < s.neighborhoods[n].size(); ++j) g.consensus[n].push_back(r.matrix());
      g.innovation.push_back(r.matrix());
      g.state.push_back(r.matrix());
    }
    GainDiagnostics d;
    d.truncated_consensus_solves = r.pod<std::int32_t>();
    d.truncated_state_solves = r.pod<std::int32_t>();
    s.steps.push_back(std::move(g));
    s.diagnostics.push_back(d);
    s.theory_mse_total.push_back(r.pod<double>());
    s.theory_mse_per_agent.push_back(r.pod<double>());
  }
  return s;
}

}  // namespace cikf
