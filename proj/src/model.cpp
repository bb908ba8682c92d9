#include "cikf/model.hpp"

#include "cikf/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <numeric>
#include <queue>
#include <sstream>

namespace cikf {
namespace {

template <typename Derived>
bool same(const Eigen::MatrixBase<Derived>& a, const Eigen::MatrixBase<Derived>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

template <typename T>
bool same_list(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!same(a[k], b[k])) return false;
  }
  return true;
}

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void expect_shape(const Matrix& m, Index rows, Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " has shape " << shape(m) << ", expected " << rows << "x" << cols;
    throw StructuralError(os.str());
  }
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < size; ++k) {
      h_ ^= p[k];
      h_ *= 0x100000001b3ULL;
    }
  }
  void integer(std::int64_t v) {
    unsigned char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * k)) & 0xff);
    bytes(buf, 8);
  }
  void real(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    integer(static_cast<std::int64_t>(bits));
  }
  void matrix(const Matrix& m) {
    integer(m.rows());
    integer(m.cols());
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) real(m(r, c));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

bool symmetric(const Matrix& m, double rel_tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  auto eng = make_stream(seed, stream);
  return eng();
}

}  // namespace

bool operator==(const ModelSpec& a, const ModelSpec& b) {
  return a.M == b.M && a.N == b.N && a.M_n == b.M_n && same(a.A, b.A) && same(a.V, b.V) &&
         same_list(a.H_n, b.H_n) && same_list(a.R_n, b.R_n) && same(a.x0_mean, b.x0_mean) &&
         same(a.Sigma0, b.Sigma0) && same(a.adjacency, b.adjacency);
}

void ModelSpec::check_structure() const {
  if (M < 1) throw StructuralError("state dimension M must be >= 1");
  if (N < 1) throw StructuralError("agent count N must be >= 1");
  if (static_cast<int>(M_n.size()) != N) throw StructuralError("M_n must list one dimension per agent");
  if (static_cast<int>(H_n.size()) != N) throw StructuralError("H_n must hold one matrix per agent");
  if (static_cast<int>(R_n.size()) != N) throw StructuralError("R_n must hold one matrix per agent");
  expect_shape(A, M, M, "A");
  expect_shape(V, M, M, "V");
  expect_shape(Sigma0, M, M, "Sigma0");
  if (x0_mean.size() != M) throw StructuralError("x0_mean must have length M");
  for (int n = 0; n < N; ++n) {
    if (M_n[n] < 0) throw StructuralError("observation dimensions must be nonnegative");
    expect_shape(H_n[n], M_n[n], M, "H_n[" + std::to_string(n) + "]");
    expect_shape(R_n[n], M_n[n], M_n[n], "R_n[" + std::to_string(n) + "]");
  }
  if (adjacency.rows() != N || adjacency.cols() != N) {
    throw StructuralError("adjacency must be N x N");
  }
  for (int n = 0; n < N; ++n) {
    if (adjacency(n, n) != 0) throw StructuralError("adjacency must have a zero diagonal");
    for (int l = 0; l < N; ++l) {
      const int a = adjacency(n, l);
      if (a != 0 && a != 1) throw StructuralError("adjacency entries must be 0 or 1");
      if (a != adjacency(l, n)) throw StructuralError("adjacency must be symmetric");
    }
  }
}

Matrix ModelSpec::stacked_H() const {
  const int rows = std::accumulate(M_n.begin(), M_n.end(), 0);
  Matrix H(rows, M);
  Index r = 0;
  for (int n = 0; n < N; ++n) {
    H.middleRows(r, M_n[n]) = H_n[n];
    r += M_n[n];
  }
  return H;
}

Matrix ModelSpec::stacked_R() const {
  return BlockDiag(R_n).dense();
}

std::uint64_t model_hash(const ModelSpec& spec) {
  Fnv1a h;
  h.integer(spec.M);
  h.integer(spec.N);
  for (int m : spec.M_n) h.integer(m);
  h.matrix(spec.A);
  h.matrix(spec.V);
  for (const auto& H : spec.H_n) h.matrix(H);
  for (const auto& R : spec.R_n) h.matrix(R);
  h.matrix(spec.x0_mean);
  h.matrix(spec.Sigma0);
  h.integer(spec.adjacency.rows());
  for (Index r = 0; r < spec.adjacency.rows(); ++r)
    for (Index c = 0; c < spec.adjacency.cols(); ++c) h.integer(spec.adjacency(r, c));
  return h.value();
}

GraphSpectrum laplacian_spectrum(const AdjacencyMatrix& adjacency) {
  const Index n_agents = adjacency.rows();
  if (adjacency.cols() != n_agents) throw StructuralError("adjacency must be square");
  GraphSpectrum g;
  g.laplacian = Matrix::Zero(n_agents, n_agents);
  g.neighborhoods.resize(static_cast<std::size_t>(n_agents));
  g.degrees.assign(static_cast<std::size_t>(n_agents), 0);
  for (Index n = 0; n < n_agents; ++n) {
    if (adjacency(n, n) != 0) throw StructuralError("adjacency must have a zero diagonal");
    for (Index l = 0; l < n_agents; ++l) {
      const int a = adjacency(n, l);
      if (a != 0 && a != 1) throw StructuralError("adjacency entries must be 0 or 1");
      if (a != adjacency(l, n)) throw StructuralError("adjacency must be symmetric");
      if (a == 1) {
        g.neighborhoods[n].push_back(static_cast<int>(l));
        g.laplacian(n, l) = -1.0;
      }
    }
    g.degrees[n] = static_cast<int>(g.neighborhoods[n].size());
    g.laplacian(n, n) = g.degrees[n];
  }
  if (n_agents > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.laplacian, Eigen::EigenvaluesOnly);
    g.eigenvalues = es.eigenvalues();
  }
  return g;
}

bool ValidationReport::ok() const { return first_failure() == nullptr; }

const AssumptionCheck* ValidationReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

bool is_detectable(const Matrix& A, const Matrix& H, double rel_tol) {
  using Complex = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;
  const Index m = A.rows();
  if (m == 0) return true;
  Eigen::EigenSolver<Matrix> es(A, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  for (Index k = 0; k < m; ++k) {
    const Complex lambda = es.eigenvalues()(k);
    if (std::abs(lambda) < 1.0 - 1e-12) continue;
    CMatrix pencil(m + H.rows(), m);
    pencil.topRows(m) = A.cast<Complex>() - lambda * CMatrix::Identity(m, m);
    if (H.rows() > 0) pencil.bottomRows(H.rows()) = H.cast<Complex>();
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    const auto& s = svd.singularValues();
    const double cutoff = rel_tol * s(0);
    Index rank = 0;
    for (Index j = 0; j < s.size(); ++j) rank += s(j) > cutoff ? 1 : 0;
    if (rank < m) return false;
  }
  return true;
}

ValidationReport validate_model(const ModelSpec& spec) {
  spec.check_structure();
  ValidationReport report;

  {
    AssumptionCheck c{"gaussian_well_posed", 1, true, ""};
    std::ostringstream why;
    for (int n = 0; n < spec.N; ++n) {
      const Matrix& R = spec.R_n[n];
      if (R.size() == 0) continue;
      if (!symmetric(R, 1e-10)) {
        c.passed = false;
        why << "R_" << n << " not symmetric; ";
      } else if (min_symmetric_eigenvalue(R) <= 0.0) {
        c.passed = false;
        why << "R_" << n << " not positive-definite; ";
      }
    }
    for (const auto& [name, mat] : {std::pair<const char*, const Matrix*>{"V", &spec.V},
                                    std::pair<const char*, const Matrix*>{"Sigma0", &spec.Sigma0}}) {
      const double scale = std::max(1.0, mat->cwiseAbs().maxCoeff());
      if (!symmetric(*mat, 1e-10)) {
        c.passed = false;
        why << name << " not symmetric; ";
      } else if (min_symmetric_eigenvalue(*mat) < -1e-10 * scale) {
        c.passed = false;
        why << name << " not positive-semidefinite; ";
      }
    }
    c.detail = c.passed ? "R_n SPD, V and Sigma0 PSD" : why.str();
    report.checks.push_back(c);
  }

  {
    const bool ok = is_detectable(spec.A, spec.stacked_H());
    report.checks.push_back({"global_detectability", 4, ok,
                             ok ? "(A, H) detectable" : "an unstable mode of A is unobserved by the stacked H"});
  }

  {
    const GraphSpectrum g = laplacian_spectrum(spec.adjacency);
    report.lambda2 = g.algebraic_connectivity();
    const bool ok = spec.N == 1 || report.lambda2 > kConnectivityTolerance;
    std::ostringstream os;
    os << "lambda2(L) = " << report.lambda2;
    report.checks.push_back({"connectivity", 5, ok, os.str()});
  }
  return report;
}

ModelParams ModelParams::paper() { return ModelParams{}; }

ModelParams ModelParams::desk() {
  ModelParams p;
  p.M = 10;
  p.N = 10;
  p.M_n = 2;
  p.edges = 25;
  return p;
}

ModelParams ModelParams::from_preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw ParameterError("unknown preset '" + name + "' (expected paper or desk)");
}

Matrix random_spd(int dim, double spectral_norm, std::uint64_t seed) {
  if (dim < 1) throw ParameterError("random_spd: dim must be >= 1");
  if (!(spectral_norm > 0.0)) throw ParameterError("random_spd: spectral_norm must be > 0");
  auto eng = make_stream(seed, 0x5350ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Matrix g(dim, dim);
  for (Index c = 0; c < dim; ++c)
    for (Index r = 0; r < dim; ++r) g(r, c) = gauss(eng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  Vector d(dim);
  for (Index k = 0; k < dim; ++k) d(k) = unif(eng);
  Index top = 0;
  d.maxCoeff(&top);
  d *= spectral_norm / d(top);
  d(top) = spectral_norm;
  return symmetrized(q * d.asDiagonal() * q.transpose());
}

AdjacencyMatrix random_connected_graph(int N, int edges, std::uint64_t seed, int max_attempts) {
  if (N < 1) throw ParameterError("graph needs at least one agent");
  const long long pairs = static_cast<long long>(N) * (N - 1) / 2;
  if (edges < N - 1) throw ParameterError("edges must be >= N-1 for a connected graph");
  if (edges > pairs) throw ParameterError("edges exceeds N(N-1)/2");

  std::vector<std::pair<int, int>> all;
  all.reserve(static_cast<std::size_t>(pairs));
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) all.emplace_back(a, b);

  auto eng = make_stream(seed, 0x4752ULL);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    // partial Fisher-Yates: the first `edges` entries form a uniform subset
    for (int k = 0; k < edges; ++k) {
      std::uniform_int_distribution<long long> pick(k, pairs - 1);
      std::swap(all[k], all[pick(eng)]);
    }
    AdjacencyMatrix adj = AdjacencyMatrix::Zero(N, N);
    for (int k = 0; k < edges; ++k) {
      adj(all[k].first, all[k].second) = 1;
      adj(all[k].second, all[k].first) = 1;
    }
    std::vector<char> seen(static_cast<std::size_t>(N), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int w = 0; w < N; ++w) {
        if (adj(u, w) && !seen[w]) {
          seen[w] = 1;
          ++reached;
          q.push(w);
        }
      }
    }
    if (reached == N) return adj;
  }
  throw GenerationError("no connected graph found within " + std::to_string(max_attempts) + " attempts");
}

Matrix random_lattice_dynamics(int M, int degree, double norm, std::uint64_t seed) {
  if (M < 1) throw ParameterError("dynamics dimension must be >= 1");
  if (degree < 0) throw ParameterError("dynamics degree must be >= 0");
  if (!(norm > 0.0)) throw ParameterError("target norm must be > 0");
  auto eng = make_stream(seed, 0x4c41ULL);

  std::vector<int> perm(static_cast<std::size_t>(M));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), eng);

  Eigen::MatrixXi pattern = Eigen::MatrixXi::Identity(M, M);
  if (degree >= M - 1) {
    pattern.setOnes();
  } else {
    if (degree % 2 == 1 && M % 2 == 1) {
      throw ParameterError("odd lattice degree requires an even dimension");
    }
    for (int k = 0; k < M; ++k) {
      for (int j = 1; j <= degree / 2; ++j) {
        const int a = perm[k];
        const int b = perm[(k + j) % M];
        pattern(a, b) = pattern(b, a) = 1;
      }
      if (degree % 2 == 1) {
        const int a = perm[k];
        const int b = perm[(k + M / 2) % M];
        pattern(a, b) = pattern(b, a) = 1;
      }
    }
  }

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix A = Matrix::Zero(M, M);
  for (int r = 0; r < M; ++r) {
    for (int c = 0; c < M; ++c) {
      if (!pattern(r, c)) continue;
      double w = 0.0;
      while (w == 0.0) w = unif(eng);
      A(r, c) = w;
    }
  }
  return A * (norm / spectral_norm(A));
}

std::vector<Matrix> site_observation_matrices(int M, int N, int M_n, std::uint64_t seed) {
  if (M_n < 0 || M_n > M) throw ParameterError("M_n must lie in [0, M]");
  std::vector<Matrix> H(static_cast<std::size_t>(N), Matrix::Zero(M_n, M));
  if (static_cast<long long>(N) * M_n >= M) {
    for (int n = 0; n < N; ++n)
      for (int k = 0; k < M_n; ++k) H[n](k, (n * M_n + k) % M) = 1.0;
    return H;
  }
  auto eng = make_stream(seed, 0x4f42ULL);
  std::vector<int> sites(static_cast<std::size_t>(M));
  for (int n = 0; n < N; ++n) {
    std::iota(sites.begin(), sites.end(), 0);
    for (int k = 0; k < M_n; ++k) {
      std::uniform_int_distribution<int> pick(k, M - 1);
      std::swap(sites[k], sites[pick(eng)]);
      H[n](k, sites[k]) = 1.0;
    }
  }
  return H;
}

ModelSpec generate_paper_model(const ModelParams& p, std::uint64_t seed) {
  if (p.M < 1 || p.N < 1) throw ParameterError("M and N must be >= 1");
  if (p.M_n < 1 || p.M_n > p.M) throw ParameterError("M_n must lie in [1, M]");
  if (!(p.a_norm > 0 && p.v_norm > 0 && p.r_norm > 0 && p.sigma0_norm > 0)) {
    throw ParameterError("norm targets must be positive");
  }

  ModelSpec spec;
  spec.M = p.M;
  spec.N = p.N;
  spec.M_n.assign(static_cast<std::size_t>(p.N), p.M_n);
  // graph first so infeasible edge counts fail before any heavier work
  spec.adjacency = random_connected_graph(p.N, p.edges, sub_seed(seed, 1));
  spec.A = random_lattice_dynamics(p.M, p.dyn_degree, p.a_norm, sub_seed(seed, 2));
  spec.H_n = site_observation_matrices(p.M, p.N, p.M_n, sub_seed(seed, 3));
  spec.V = random_spd(p.M, p.v_norm, sub_seed(seed, 4));
  spec.Sigma0 = random_spd(p.M, p.sigma0_norm, sub_seed(seed, 5));
  spec.R_n.reserve(static_cast<std::size_t>(p.N));
  for (int n = 0; n < p.N; ++n) {
    spec.R_n.push_back(random_spd(p.M_n, p.r_norm, sub_seed(seed, 100 + static_cast<std::uint64_t>(n))));
  }
  auto eng = make_stream(seed, 6);
  std::normal_distribution<double> gauss(0.0, 1.0);
  spec.x0_mean.resize(p.M);
  for (int k = 0; k < p.M; ++k) spec.x0_mean(k) = gauss(eng);
  return spec;
}

}  // namespace cikf
