#include "cikf/error.hpp"
#include "cikf/io.hpp"
#include "cikf/model.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>

using namespace cikf;

namespace {

AdjacencyMatrix path3() {
  AdjacencyMatrix a = AdjacencyMatrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1;
  return a;
}

}  // namespace

TEST_CASE("Laplacian spectra of the path and the triangle") {
  GraphSpectrum g = laplacian_spectrum(path3());
  CHECK(g.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(g.eigenvalues(2) == doctest::Approx(3.0));
  CHECK(g.degrees == std::vector<int>{1, 2, 1});
  CHECK(g.neighborhoods[1] == std::vector<int>{0, 2});

  AdjacencyMatrix k3 = AdjacencyMatrix::Ones(3, 3) - AdjacencyMatrix::Identity(3, 3);
  g = laplacian_spectrum(k3);
  CHECK(std::abs(g.eigenvalues(0)) < 1e-12);
  CHECK(g.eigenvalues(1) == doctest::Approx(3.0));
  CHECK(g.eigenvalues(2) == doctest::Approx(3.0));
  CHECK(g.algebraic_connectivity() == doctest::Approx(3.0));
}

TEST_CASE("malformed graphs and dimensions are structural errors") {
  AdjacencyMatrix a = path3();
  a(0, 2) = 1;
  CHECK_THROWS_AS(laplacian_spectrum(a), StructuralError);
  a = path3();
  a(0, 0) = 1;
  CHECK_THROWS_AS(laplacian_spectrum(a), StructuralError);

  ModelSpec s = oracle::scalar_model(0.9, 0.25, 1, 1, 1);
  s.check_structure();
  s.H_n[0] = Matrix::Ones(1, 2);
  CHECK_THROWS_AS(s.check_structure(), StructuralError);
}

TEST_CASE("detectability") {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 2.0;
  A(1, 1) = 0.5;
  Matrix H(1, 2);
  H << 0, 1;
  CHECK_FALSE(is_detectable(A, H));  // the unstable mode 2 is unobserved
  H << 1, 0;
  CHECK(is_detectable(A, H));
  CHECK(is_detectable(0.5 * Matrix::Identity(3, 3), Matrix::Zero(0, 3)));
  CHECK_FALSE(is_detectable(Matrix::Identity(2, 2), Matrix::Zero(0, 2)));  // |lambda| = 1 counts
}

TEST_CASE("validation names the failing assumption") {
  ModelSpec s = oracle::small_model(6, 4, 4, 11);
  ValidationReport r = validate_model(s);
  CHECK(r.ok());
  CHECK(r.lambda2 > 0);

  s.adjacency.setZero();
  s.adjacency(0, 1) = s.adjacency(1, 0) = 1;
  s.adjacency(2, 3) = s.adjacency(3, 2) = 1;
  r = validate_model(s);
  REQUIRE_FALSE(r.ok());
  CHECK(r.first_failure()->assumption == 5);
  CHECK(r.first_failure()->name == "connectivity");

  s = oracle::scalar_model(2.0, 1, 0, 1, 1);
  r = validate_model(s);
  REQUIRE_FALSE(r.ok());
  CHECK(r.first_failure()->assumption == 4);

  s = oracle::scalar_model(0.5, 1, 1, -1, 1);
  r = validate_model(s);
  REQUIRE_FALSE(r.ok());
  CHECK(r.first_failure()->assumption == 1);
}

TEST_CASE("random generators meet their contracts") {
  const Matrix S = random_spd(7, 16.0, 3);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(es.eigenvalues().minCoeff() > 0);
  CHECK((S - S.transpose()).norm() == 0.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AdjacencyMatrix g = random_connected_graph(12, 20, seed);
    CHECK(g.sum() == 40);
    CHECK(laplacian_spectrum(g).algebraic_connectivity() > 1e-10);
  }
  CHECK_THROWS_AS(random_connected_graph(5, 3, 1), ParameterError);
  CHECK_THROWS_AS(random_connected_graph(5, 11, 1), ParameterError);
  CHECK(random_connected_graph(4, 6, 1).sum() == 12);

  const Matrix A = random_lattice_dynamics(20, 4, 1.05, 9);
  CHECK(spectral_norm(A) == doctest::Approx(1.05).epsilon(1e-12));
  for (int r = 0; r < 20; ++r) {
    int nz = 0;
    for (int c = 0; c < 20; ++c) nz += A(r, c) != 0.0 ? 1 : 0;
    CHECK(nz == 5);  // self-coupling plus 4 lattice neighbours
  }
  CHECK_THROWS_AS(random_lattice_dynamics(5, 3, 1.0, 1), ParameterError);

  const auto H = site_observation_matrices(10, 10, 2, 4);
  Vector covered = Vector::Zero(10);
  for (const auto& h : H) {
    CHECK(h.rows() == 2);
    for (int k = 0; k < 2; ++k) CHECK(h.row(k).sum() == 1.0);
    covered += h.colwise().sum().transpose();
  }
  CHECK(covered.minCoeff() > 0);
}

TEST_CASE("paper and desk presets") {
  const ModelParams p = ModelParams::paper();
  CHECK(p.M == 50);
  CHECK(p.N == 50);
  CHECK(p.edges == 138);
  const ModelParams d = ModelParams::from_preset("desk");
  CHECK(d.M == 10);
  CHECK(d.edges == 25);
  CHECK_THROWS_AS(ModelParams::from_preset("huge"), ParameterError);

  const ModelSpec s = generate_paper_model(p, 7);
  CHECK(spectral_norm(s.A) == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(s.adjacency.sum() == 2 * 138);
  CHECK(validate_model(s).ok());
  const ModelSpec again = generate_paper_model(p, 7);
  CHECK(again == s);
  CHECK(model_hash(again) == model_hash(s));
  CHECK_FALSE(generate_paper_model(p, 8) == s);
}

TEST_CASE("model JSON round trip is bit exact") {
  const ModelSpec s = oracle::small_model(6, 4, 4, 21);
  const std::string text = model_to_json(s, FileMeta{version(), 21, 0xabcULL, 0});
  const ModelSpec back = model_from_json(text);
  CHECK(back == s);
  CHECK(model_hash(back) == model_hash(s));

  const auto dir = std::filesystem::temp_directory_path() / "cikf_test_model";
  std::filesystem::create_directories(dir);
  save_model(dir / "m.json", s, FileMeta{version(), 21, 0xabcULL, 0});
  CHECK(load_model(dir / "m.json") == s);
  const auto meta = load_model_meta(dir / "m.json");
  REQUIRE(meta.has_value());
  CHECK(meta->seed == 21);
  CHECK(meta->config_hash == 0xabcULL);
  CHECK(meta->model_hash == model_hash(s));

  CHECK_THROWS_AS(model_from_json("{\"M\": 1}"), StructuralError);
  CHECK_THROWS_AS(model_from_json("not json"), StructuralError);
  CHECK_THROWS_AS(load_model(dir / "missing.json"), IoError);
}
