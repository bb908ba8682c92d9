#pragma once

#include "cikf/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cikf {

using AdjacencyMatrix = Eigen::MatrixXi;

/// Physical field, sensing, and communication model.
///
/// x_{i+1} = A x_i + v_i,  z^n_i = H_n x_i + r^n_i,  x_0 ~ N(x0_mean, Sigma0),
/// v_i ~ N(0, V), r^n_i ~ N(0, R_n); agents talk over the undirected graph
/// given by `adjacency`.
struct ModelSpec {
  int M = 0;
  int N = 0;
  std::vector<int> M_n;
  Matrix A;
  Matrix V;
  std::vector<Matrix> H_n;
  std::vector<Matrix> R_n;
  Vector x0_mean;
  Matrix Sigma0;
  AdjacencyMatrix adjacency;

  /// Throws StructuralError on any dimension inconsistency or a graph that is
  /// not simple and undirected.
  void check_structure() const;

  /// All H_n stacked vertically (sum(M_n) x M).
  Matrix stacked_H() const;
  /// blockdiag{R_1, ..., R_N}.
  Matrix stacked_R() const;

  /// Exact (bitwise for floating values) equality, dimension-safe.
  friend bool operator==(const ModelSpec& a, const ModelSpec& b);
};

/// FNV-1a over a canonical byte image of the model. Stable across platforms
/// with IEEE doubles.
std::uint64_t model_hash(const ModelSpec& spec);

struct GraphSpectrum {
  Matrix laplacian;
  Vector eigenvalues;  // ascending
  std::vector<std::vector<int>> neighborhoods;  // sorted, excludes the agent itself
  std::vector<int> degrees;

  double algebraic_connectivity() const { return eigenvalues.size() > 1 ? eigenvalues(1) : 0.0; }
  int agent_count() const { return static_cast<int>(degrees.size()); }
};

GraphSpectrum laplacian_spectrum(const AdjacencyMatrix& adjacency);

/// One line of the validation report. `assumption` is the model assumption
/// number the check certifies.
struct AssumptionCheck {
  std::string name;
  int assumption = 0;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  double lambda2 = 0.0;

  bool ok() const;
  const AssumptionCheck* first_failure() const;
};

/// Structural problems throw; assumption failures are report entries.
ValidationReport validate_model(const ModelSpec& spec);

/// rank([A - lambda I; H]) == M for every eigenvalue |lambda| >= 1, with
/// numerical rank relative to the largest singular value.
bool is_detectable(const Matrix& A, const Matrix& H, double rel_tol = 1e-8);

/// Connectivity threshold applied to lambda_2(L).
inline constexpr double kConnectivityTolerance = 1e-10;

struct ModelParams {
  int M = 50;
  int N = 50;
  int M_n = 2;
  double a_norm = 1.05;
  double v_norm = 4.0;
  double r_norm = 8.0;
  double sigma0_norm = 16.0;
  int edges = 138;
  int dyn_degree = 4;

  static ModelParams paper();
  static ModelParams desk();
  static ModelParams from_preset(const std::string& name);

  bool operator==(const ModelParams&) const = default;
};

/// Random symmetric positive-definite matrix Q diag(d) Q^T, d ~ U(0.1, 1)
/// rescaled so the largest eigenvalue equals `spectral_norm`.
Matrix random_spd(int dim, double spectral_norm, std::uint64_t seed);

/// Erdos-Renyi graph with exactly `edges` edges, resampled until connected.
AdjacencyMatrix random_connected_graph(int N, int edges, std::uint64_t seed,
                                       int max_attempts = 1000);

/// Sparse field dynamics: a randomly relabelled ring lattice of degree
/// `degree` plus self-coupling, entries ~ U(0, 1), rescaled to ||A||_2 = norm.
Matrix random_lattice_dynamics(int M, int degree, double norm, std::uint64_t seed);

/// 0-1 observation matrices with one selected site per row.
std::vector<Matrix> site_observation_matrices(int M, int N, int M_n, std::uint64_t seed);

/// Builds a model with the statistics of the reference numerical experiment.
/// Pure function of (params, seed).
ModelSpec generate_paper_model(const ModelParams& params, std::uint64_t seed);

}  // namespace cikf
