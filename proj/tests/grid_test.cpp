#include "cavmd/error.hpp"
#include "cavmd/grid.hpp"
#include "cavmd/shin_metiu.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace cavmd;

namespace {

// 401-point, 0.08-bohr reference for the bare molecule at R = 0, computed once
// with an independent dense-diagonalization script.
constexpr double kFineGridGroundStateR0 = -1.035930081219604;
// |E(41 points, 0.8) - E(401 points, 0.08)| is 6.5e-9 hartree.
constexpr double kBasisSetError = 1e-8;

Matrix random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return 0.5 * (a + a.transpose());
}

}  // namespace

TEST_CASE("make_grid produces centered equidistant points") {
  const auto g = make_grid(41, 0.8);
  CHECK(g.size() == 41);
  CHECK(g.points[0] == doctest::Approx(-16.0).epsilon(1e-15));
  CHECK(g.points[40] == doctest::Approx(16.0).epsilon(1e-15));
  for (Eigen::Index i = 1; i < g.points.size(); ++i) {
    CHECK(std::abs(g.points[i] - g.points[i - 1] - 0.8) < 1e-13);
  }
  for (Eigen::Index i = 0; i < g.points.size(); ++i) {
    CHECK(g.points[i] == -g.points[40 - i]);
  }

  const auto g3 = make_grid(3, 1.0);
  CHECK(g3.points[0] == -1.0);
  CHECK(g3.points[1] == 0.0);
  CHECK(g3.points[2] == 1.0);

  const auto g5 = make_grid(5, 0.5);
  const double expected[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int i = 0; i < 5; ++i) CHECK(g5.points[i] == expected[i]);
}

TEST_CASE("make_grid rejects bad arguments") {
  CHECK_THROWS_AS(make_grid(2, 1.0), Error);
  CHECK_THROWS_AS(make_grid(11, 0.0), Error);
  CHECK_THROWS_AS(make_grid(11, -0.1), Error);
  try {
    make_grid(2, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
  }
}

TEST_CASE("sinc-DVR kinetic operator") {
  const auto g = make_grid(41, 0.8);
  const auto t = kinetic_operator(g, 1.0);
  CHECK(t.matrix()(7, 7) == doctest::Approx(std::numbers::pi * std::numbers::pi / (6.0 * 0.64)));
  CHECK(t.matrix()(0, 0) == t.matrix()(20, 20));
  CHECK(t.matrix()(3, 5) == doctest::Approx(1.0 / (0.64 * 4.0)));
  CHECK(t.matrix()(3, 4) == doctest::Approx(-1.0 / 0.64));
  CHECK((t.matrix() - t.matrix().transpose()).cwiseAbs().maxCoeff() == 0.0);
  const auto eig = diagonalize(t);
  CHECK(eig.eigenvalues.minCoeff() > -1e-12);

  CHECK_THROWS_AS(kinetic_operator(g, 0.0), Error);
}

TEST_CASE("harmonic oscillator ground state on a wide fine grid") {
  const double w = 0.01;
  const auto g = make_grid(321, 0.5);
  auto h = kinetic_operator(g, 1.0);
  h.add_diagonal(0.5 * w * w * g.points.cwiseAbs2());
  const auto eig = diagonalize(h);
  CHECK(std::abs(eig.eigenvalues[0] - 0.5 * w) < 1e-6);
  CHECK(std::abs(eig.eigenvalues[1] - 1.5 * w) < 1e-6);
}

TEST_CASE("diagonalize: trivial cases") {
  const auto id = diagonalize(DenseOperator(Matrix::Identity(4, 4)));
  for (int i = 0; i < 4; ++i) CHECK(id.eigenvalues[i] == doctest::Approx(1.0));

  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3.0, 1.0, 2.0;
  const auto eig = diagonalize(DenseOperator(d));
  CHECK(eig.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(eig.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(eig.eigenvalues[2] == doctest::Approx(3.0));
}

TEST_CASE("diagonalize: reconstruction, ordering and orthonormality on random matrices") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_symmetric(rng, 41);
    const auto eig = diagonalize(DenseOperator(a));
    for (Eigen::Index k = 1; k < eig.eigenvalues.size(); ++k) CHECK(eig.eigenvalues[k] >= eig.eigenvalues[k - 1]);
    const Matrix& v = eig.eigenvectors;
    const Matrix recon = v * eig.eigenvalues.asDiagonal() * v.transpose();
    CHECK((a - recon).cwiseAbs().maxCoeff() < 1e-9 * a.cwiseAbs().maxCoeff());
    CHECK((v.transpose() * v - Matrix::Identity(41, 41)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("variational bound against random trial vectors") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  const Matrix a = random_symmetric(rng, 41);
  const DenseOperator op(a);
  const double e0 = diagonalize(op).eigenvalues[0];
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(41);
    for (auto& xi : x) xi = gauss(rng);
    x.normalize();
    CHECK(e0 <= expectation(op, x) + 1e-14);
  }
}

TEST_CASE("warm-started ground state agrees with full diagonalization") {
  const ShinMetiuParams p;
  const auto g = make_grid(41, 0.8);
  const auto t = kinetic_operator(g, 1.0);
  const Matrix h0 = bare_electronic_hamiltonian(g, t, 1.5, p);
  const Matrix h1 = bare_electronic_hamiltonian(g, t, 1.52, p);
  const auto guess = ground_state(h0);
  const auto warm = ground_state(h1, guess.psi);
  const auto cold = ground_state(h1);
  CHECK(std::abs(warm.energy - cold.energy) < 1e-13);
  CHECK((warm.psi - cold.psi).cwiseAbs().maxCoeff() < 1e-10);

  // A guess orthogonal to the ground state (first excited state) still yields the ground state.
  const auto eig = diagonalize(DenseOperator(h1));
  const auto from_excited = ground_state(h1, eig.eigenvectors.col(1));
  CHECK(std::abs(from_excited.energy - eig.eigenvalues[0]) < 1e-12);
}

TEST_CASE("bare Shin-Metiu ground state matches the fine-grid reference") {
  const ShinMetiuParams p;
  const auto g = make_grid(41, 0.8);
  const auto t = kinetic_operator(g, 1.0);
  const auto eig = diagonalize(DenseOperator(bare_electronic_hamiltonian(g, t, 0.0, p)));
  CHECK(std::abs(eig.eigenvalues[0] - kFineGridGroundStateR0) < kBasisSetError);

  // grid convergence: 81 points at half the spacing
  const auto g2 = make_grid(81, 0.4);
  const auto t2 = kinetic_operator(g2, 1.0);
  const auto eig2 = diagonalize(DenseOperator(bare_electronic_hamiltonian(g2, t2, 0.0, p)));
  CHECK(std::abs(eig.eigenvalues[0] - eig2.eigenvalues[0]) < kBasisSetError);
}

TEST_CASE("expectation values") {
  const auto g = make_grid(41, 0.8);
  const auto x = position_operator(g);
  const DenseOperator id(Matrix::Identity(41, 41));

  Vector even(41);
  for (Eigen::Index i = 0; i < 41; ++i) even[i] = std::exp(-0.1 * g.points[i] * g.points[i]);
  even.normalize();
  CHECK(expectation(id, even) == doctest::Approx(1.0));
  CHECK(std::abs(expectation(x, even)) < 1e-14);

  Vector delta = Vector::Zero(41);
  delta[30] = 1.0;
  CHECK(expectation(x, delta) == doctest::Approx(g.points[30]));

  CHECK_THROWS_AS(expectation(x, Vector::Zero(40)), Error);
}

TEST_CASE("DenseOperator rejects non-symmetric input") {
  Matrix m = Matrix::Identity(3, 3);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(DenseOperator{m}, Error);
  CHECK_THROWS_AS(DenseOperator{Matrix(2, 3)}, Error);
}
