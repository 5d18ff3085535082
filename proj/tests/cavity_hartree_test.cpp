#include "cavmd/cavity_hartree.hpp"
#include "cavmd/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cavmd;

namespace {

const Grid1D kGrid = make_grid(41, 0.8);

ScfOptions tight() {
  ScfOptions o;
  o.energy_tol = 1e-13;
  o.dipole_tol = 1e-11;
  o.max_iter = 500;
  return o;
}

EnsembleState make_state(std::vector<double> R, std::vector<double> q, std::vector<Vec3> orient = {}) {
  EnsembleState s;
  s.R = std::move(R);
  s.V.assign(s.R.size(), 0.0);
  s.q = std::move(q);
  s.p.assign(s.q.size(), 0.0);
  s.orient = orient.empty() ? std::vector<Vec3>(s.R.size(), Vec3::UnitZ()) : std::move(orient);
  return s;
}

// Independent reference: iterate the coupled one-electron problems directly
// from the Hartree-product energy
//   E = sum_n <H_n> + sum_a [ (omega q - X - S)^2 + sum_n (<x^2> - <x>^2) ] / 2,
// with x_n = -g_n r, g_n = lambda (e_z . n_n), S = sum_n <x_n>.
struct Reference {
  std::vector<double> r_mean;
  double energy = 0.0;
};

Reference nested_fixed_point(const EnsembleState& s, const std::vector<CavityMode>& modes) {
  const ShinMetiuParams p;
  const auto t = kinetic_operator(kGrid, 1.0);
  const std::size_t n_mol = s.R.size();
  std::vector<std::vector<double>> g(modes.size(), std::vector<double>(n_mol));
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t n = 0; n < n_mol; ++n) g[a][n] = modes[a].lambda * s.orient[n].z();

  std::vector<double> r(n_mol, 0.0);
  std::vector<Vector> psi(n_mol);
  for (int outer = 0; outer < 2000; ++outer) {
    std::vector<double> r_new(n_mol);
    for (std::size_t n = 0; n < n_mol; ++n) {
      Matrix h = bare_electronic_hamiltonian(kGrid, t, s.R[n], p);
      for (std::size_t a = 0; a < modes.size(); ++a) {
        double X = 0.0, others = 0.0;
        for (std::size_t m = 0; m < n_mol; ++m) {
          X += g[a][m] * p.Z * s.R[m];
          if (m != n) others += -g[a][m] * r[m];
        }
        const double c = X - modes[a].omega * s.q[a] + others;
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
          const double x = -g[a][n] * kGrid.points[i];
          h(i, i) += c * x + 0.5 * x * x;
        }
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      psi[n] = es.eigenvectors().col(0);
      r_new[n] = psi[n].cwiseAbs2().dot(kGrid.points);
    }
    double change = 0.0;
    for (std::size_t n = 0; n < n_mol; ++n) change = std::max(change, std::abs(r_new[n] - r[n]));
    r = r_new;
    if (change < 1e-13) break;
  }

  Reference ref;
  ref.r_mean = r;
  for (std::size_t n = 0; n < n_mol; ++n) {
    const Matrix h = bare_electronic_hamiltonian(kGrid, t, s.R[n], p);
    ref.energy += psi[n].dot(h * psi[n]) + nuclear_potential(s.R[n], p);
  }
  for (std::size_t a = 0; a < modes.size(); ++a) {
    double X = 0.0, S = 0.0, fluct = 0.0;
    for (std::size_t n = 0; n < n_mol; ++n) {
      X += g[a][n] * p.Z * s.R[n];
      S += -g[a][n] * r[n];
      const double r2 = psi[n].cwiseAbs2().dot(kGrid.points.cwiseAbs2());
      fluct += g[a][n] * g[a][n] * (r2 - r[n] * r[n]);
    }
    const double d = modes[a].omega * s.q[a] - X - S;
    ref.energy += 0.5 * d * d + 0.5 * fluct + 0.5 * s.p[a] * s.p[a];
  }
  return ref;
}

}  // namespace

TEST_CASE("dipole-dipole energy") {
  CHECK(dipole_dipole_energy({{0.1, -0.2}}) == doctest::Approx(-0.04));
  CHECK(dipole_dipole_energy({{0.3, 0.3, 0.3}}) == doctest::Approx(6 * 0.09));
  CHECK(dipole_dipole_energy({{1.0, 2.0}}) == doctest::Approx(4.0));
  CHECK(dipole_dipole_energy({{1.0, 2.0, 3.0}}) == doctest::Approx(2.0 * (2.0 + 3.0 + 6.0)));
  CHECK(dipole_dipole_energy({{5.0}}) == 0.0);
  CHECK(dipole_dipole_energy({{1.0, -1.0}, {2.0, 2.0}}) == doctest::Approx(-2.0 + 8.0));
}

TEST_CASE("zero coupling reproduces the bare molecule") {
  const ShinMetiuParams p;
  CavityHartreeSolver solver(kGrid, p, {{6.27e-3, 0.0}});
  const auto s = make_state({1.2, -0.4, 2.0}, {0.7});
  const auto sol = solver.solve(s, nullptr, tight());
  double bare_sum = 0.0;
  for (std::size_t n = 0; n < 3; ++n) {
    const auto b = bare_ground_state(kGrid, solver.kinetic(), s.R[n], p);
    CHECK(std::abs(sol.r_mean[n] - b.r_mean) < 1e-10);
    bare_sum += b.surface_energy;
    CHECK(solver.local_polarization_shift(n, s, sol).dr == 0.0);
  }
  CHECK(sol.energy.bare == doctest::Approx(bare_sum).epsilon(1e-12));
  CHECK(sol.energy.dse_local == 0.0);
  CHECK(sol.energy.coupling == 0.0);
  CHECK(sol.energy.dipole_dipole == 0.0);
  CHECK(sol.energy.photon == doctest::Approx(0.5 * std::pow(6.27e-3 * 0.7, 2)));
  CHECK(solver.photon_force(0, sol, s) == doctest::Approx(-6.27e-3 * 6.27e-3 * 0.7));
}

TEST_CASE("SCF agrees with the nested fixed-point reference") {
  const std::vector<CavityMode> modes = {{6.27e-3, 0.05}, {1.2e-2, 0.03}};
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, modes);
  const Vec3 tilted = Vec3(0.6, 0.0, 0.8);
  const auto s = make_state({1.2, -0.9}, {3.0, -1.0}, {Vec3::UnitZ(), tilted});
  const auto sol = solver.solve(s, nullptr, tight());
  const auto ref = nested_fixed_point(s, modes);
  for (std::size_t n = 0; n < 2; ++n) CHECK(std::abs(sol.r_mean[n] - ref.r_mean[n]) < 1e-9);
  CHECK(std::abs(sol.energy.total - ref.energy) < 1e-11);
  const auto& e = sol.energy;
  CHECK(e.total == doctest::Approx(e.bare + e.dse_local + e.coupling + e.dipole_dipole + e.photon).epsilon(1e-14));
}

TEST_CASE("energy functional at the SCF orbitals is the reported energy and a variational minimum") {
  const std::vector<CavityMode> modes = {{6.27e-3, 0.08}};
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, modes);
  const auto s = make_state({1.7, -1.6, 0.3}, {5.0});
  const auto sol = solver.solve(s, nullptr, tight());
  CHECK(solver.evaluate_energy(s, sol.psi).total == doctest::Approx(sol.energy.total).epsilon(1e-13));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    auto psi = sol.psi;
    for (auto& v : psi) {
      for (auto& c : v) c += 1e-2 * gauss(rng);
      v.normalize();
    }
    CHECK(solver.evaluate_energy(s, psi).total >= sol.energy.total - 1e-12);
  }
}

TEST_CASE("forces are minus the energy gradient over random configurations") {
  const std::vector<CavityMode> modes = {{6.27e-3, 0.05}};
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, modes);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(-2.5, 2.5), photon(-5.0, 5.0);
  std::normal_distribution<double> gauss;
  const auto opts = tight();
  const double h = 1e-4;
  double worst = 0.0;
  for (int config = 0; config < 10; ++config) {
    std::vector<double> R(5);
    std::vector<Vec3> orient(5);
    for (std::size_t n = 0; n < 5; ++n) {
      R[n] = pos(rng);
      orient[n] = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    }
    const auto s = make_state(R, {photon(rng)}, orient);
    const auto sol = solver.solve(s, nullptr, opts);
    const auto energy_at = [&](EnsembleState shifted) { return solver.solve(shifted, &sol, opts).energy.potential(); };

    const auto fn = solver.nuclear_forces(sol, s);
    for (std::size_t n = 0; n < 5; ++n) {
      auto sp = s, sm = s;
      sp.R[n] += h;
      sm.R[n] -= h;
      const double fd = -(energy_at(sp) - energy_at(sm)) / (2 * h);
      worst = std::max(worst, std::abs(fn[n] - fd) / std::abs(fd));
    }
    auto sp = s, sm = s;
    sp.q[0] += h;
    sm.q[0] -= h;
    const double fd = -(energy_at(sp) - energy_at(sm)) / (2 * h);
    worst = std::max(worst, std::abs(solver.photon_force(0, sol, s) - fd) / std::abs(fd));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("forces with several modes") {
  const std::vector<CavityMode> modes = {{6.27e-3, 0.05}, {9.0e-3, 0.02}};
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, modes);
  const auto s = make_state({1.5, -1.9, 0.4}, {2.0, -3.0},
                            {Vec3::UnitZ(), Vec3(0.0, 0.6, -0.8), Vec3(0.48, 0.6, 0.64)});
  const auto opts = tight();
  const auto sol = solver.solve(s, nullptr, opts);
  const double h = 1e-4;
  const auto fq = solver.photon_forces(sol, s);
  for (std::size_t a = 0; a < 2; ++a) {
    auto sp = s, sm = s;
    sp.q[a] += h;
    sm.q[a] -= h;
    const double fd = -(solver.solve(sp, &sol, opts).energy.potential() -
                        solver.solve(sm, &sol, opts).energy.potential()) /
                      (2 * h);
    CHECK(std::abs(fq[a] - fd) <= 1e-5 * std::abs(fd));
  }
}

TEST_CASE("coupling geometry") {
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, {{6.27e-3, 0.0085}});
  const double c60 = 0.5, s60 = std::sqrt(3.0) / 2.0;
  const auto s = make_state({0.5, 1.0, -1.0}, {0.0}, {Vec3::UnitZ(), Vec3(s60, 0.0, c60), Vec3::UnitY()});
  CHECK(solver.effective_coupling(0, 0, s) == 0.0085);
  CHECK(solver.effective_coupling(1, 0, s) == doctest::Approx(0.00425).epsilon(1e-14));
  CHECK(solver.effective_coupling(2, 0, s) == 0.0);
  CHECK_THROWS_AS(solver.effective_coupling(3, 0, s), Error);
  CHECK_THROWS_AS(solver.effective_coupling(0, 1, s), Error);

  CHECK(solver.nuclear_polarization(make_state({0.5}, {0.0}), 0) == doctest::Approx(0.00425));
  CavityHartreeSolver two(kGrid, ShinMetiuParams{}, {{6.27e-3, 0.01}});
  CHECK(two.nuclear_polarization(make_state({1.0, -1.0}, {0.0}), 0) == 0.0);
  CHECK(two.nuclear_polarization(make_state({0.0, 0.0}, {0.0}), 0) == 0.0);
}

TEST_CASE("dressed Hamiltonian") {
  const ShinMetiuParams p;
  const double lambda = 0.03, w = 6.27e-3;
  CavityHartreeSolver solver(kGrid, p, {{w, lambda}});
  const Vector& r = kGrid.points;

  CavityHartreeSolver bare(kGrid, p, {{w, 0.0}});
  const auto s0 = make_state({1.2, -0.7}, {2.0});
  const Matrix hb = bare_electronic_hamiltonian(kGrid, solver.kinetic(), 1.2, p);
  CHECK(bare.dressed_hamiltonian(0, s0, {{0.0, 0.3}}).matrix() == hb);

  // q chosen so that the linear coefficient vanishes: only lambda^2 r^2 / 2 remains
  const double R = 0.8;
  const auto s1 = make_state({R}, {lambda * R / w});
  const Matrix h1 = solver.dressed_hamiltonian(0, s1, {{0.0}}).matrix();
  const Matrix expected = bare_electronic_hamiltonian(kGrid, solver.kinetic(), R, p) +
                          Matrix((0.5 * lambda * lambda * r.cwiseAbs2()).asDiagonal());
  CHECK((h1 - expected).cwiseAbs().maxCoeff() < 1e-14);

  // shifting the partner polarization by delta adds -lambda delta r
  const auto s2 = make_state({1.2, -0.7}, {2.0});
  const double delta = 0.37;
  const Matrix a = solver.dressed_hamiltonian(0, s2, {{0.0, 0.1}}).matrix();
  const Matrix b = solver.dressed_hamiltonian(0, s2, {{0.0, 0.1 + delta}}).matrix();
  const Matrix diff = b - a;
  for (Eigen::Index i = 0; i < r.size(); ++i) CHECK(diff(i, i) == doctest::Approx(-lambda * delta * r[i]).epsilon(1e-9));
  CHECK((diff - Matrix(diff.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(solver.dressed_hamiltonian(0, s2, {{0.0}}), Error);
}

TEST_CASE("single symmetric molecule") {
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, {{6.27e-3, 0.05}});
  const auto s = make_state({0.0}, {0.0});
  const auto sol = solver.solve(s, nullptr, tight());
  CHECK(sol.energy.dipole_dipole == 0.0);
  CHECK(std::abs(sol.r_mean[0]) < 1e-12);
  CHECK(std::abs(solver.nuclear_force(0, sol, s)) < 1e-12);
  CHECK(std::abs(solver.local_polarization_shift(0, s, sol).dr) < 1e-12);
  CHECK(sol.energy.photon >= 0.0);
}

TEST_CASE("photon force vanishes at the displaced equilibrium") {
  const double w = 6.27e-3;
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, {{w, 0.05}});
  auto s = make_state({1.4, -0.3}, {0.0});
  // the electronic polarization depends on q, so iterate q* = (X + <x>) / w
  for (int k = 0; k < 100; ++k) {
    const auto sol = solver.solve(s, nullptr, tight());
    const auto xbar = solver.mean_polarizations(s, sol.r_mean);
    double x = 0.0;
    for (double v : xbar[0]) x += v;
    s.q[0] = (solver.nuclear_polarization(s, 0) + x) / w;
  }
  const auto sol = solver.solve(s, nullptr, tight());
  CHECK(std::abs(solver.photon_force(0, sol, s)) < 1e-12);
}

TEST_CASE("fixed-point residual and variational consistency") {
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, {{6.27e-3, 0.1}});
  const auto s = make_state({1.7, -1.6, 0.3, 2.4}, {-4.0});
  const auto sol = solver.solve(s, nullptr, ScfOptions{});

  // one more sweep from the converged state
  ScfOptions one;
  one.max_iter = 1;
  one.energy_tol = 1e9;
  one.dipole_tol = 1e9;
  const auto extra = solver.solve(s, &sol, one);
  for (std::size_t n = 0; n < 4; ++n) CHECK(std::abs(extra.r_mean[n] - sol.r_mean[n]) < 1e-6);
  CHECK(std::abs(extra.energy.total - sol.energy.total) < ScfOptions{}.energy_tol);

  std::vector<WaveFunction1D> bare;
  for (double R : s.R) bare.push_back(bare_ground_state(kGrid, solver.kinetic(), R, solver.molecule()).psi);
  CHECK(sol.energy.total <= solver.evaluate_energy(s, bare).total);
}

TEST_CASE("local shift matches the reference minus the bare value") {
  const std::vector<CavityMode> modes = {{6.27e-3, 0.02}};
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, modes);
  const auto s = make_state({1.3, -1.8}, {1.0});
  const auto sol = solver.solve(s, nullptr, tight());
  const auto ref = nested_fixed_point(s, modes);
  for (std::size_t n = 0; n < 2; ++n) {
    const double bare = bare_ground_state(kGrid, solver.kinetic(), s.R[n], solver.molecule()).r_mean;
    CHECK(std::abs(solver.local_polarization_shift(n, s, sol).dr - (ref.r_mean[n] - bare)) < 1e-8);
  }
}

TEST_CASE("permutation and parity invariance") {
  const std::vector<CavityMode> modes = {{6.27e-3, 0.06}};
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, modes);
  const auto s = make_state({1.4, -0.2, 2.1}, {1.5});
  const auto sol = solver.solve(s, nullptr, tight());

  const auto perm = make_state({2.1, 1.4, -0.2}, {1.5});
  const auto psol = solver.solve(perm, nullptr, tight());
  CHECK(psol.energy.total == doctest::Approx(sol.energy.total).epsilon(1e-12));
  CHECK(std::abs(psol.r_mean[0] - sol.r_mean[2]) < 1e-9);
  CHECK(std::abs(psol.r_mean[1] - sol.r_mean[0]) < 1e-9);

  const auto mirror = make_state({-1.4, 0.2, -2.1}, {-1.5});
  const auto msol = solver.solve(mirror, nullptr, tight());
  CHECK(msol.energy.total == doctest::Approx(sol.energy.total).epsilon(1e-12));
  for (std::size_t n = 0; n < 3; ++n) CHECK(std::abs(msol.r_mean[n] + sol.r_mean[n]) < 1e-9);
  const auto f = solver.nuclear_forces(sol, s);
  const auto mf = solver.nuclear_forces(msol, mirror);
  for (std::size_t n = 0; n < 3; ++n) CHECK(mf[n] == doctest::Approx(-f[n]).epsilon(1e-7));

  // flipping a molecule's orientation together with its coordinate is a symmetry
  auto flipped = s;
  flipped.R[1] = -s.R[1];
  flipped.orient[1] = -Vec3::UnitZ();
  const auto fsol = solver.solve(flipped, nullptr, tight());
  CHECK(fsol.energy.total == doctest::Approx(sol.energy.total).epsilon(1e-12));
  CHECK(std::abs(fsol.r_mean[1] + sol.r_mean[1]) < 1e-9);
}

TEST_CASE("perpendicular molecules decouple") {
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, {{6.27e-3, 0.1}});
  const auto s = make_state({1.3, -1.1}, {2.0}, {Vec3::UnitX(), Vec3::UnitZ()});
  const auto sol = solver.solve(s, nullptr, tight());
  CHECK(solver.effective_coupling(0, 0, s) == 0.0);
  CHECK(solver.local_polarization_shift(0, s, sol).dr == 0.0);
  CHECK(solver.local_polarization_shift(1, s, sol).dr != 0.0);
}

TEST_CASE("warm start converges faster to the same state") {
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, {{6.27e-3, 0.05}});
  auto s = make_state({1.7, -1.7, 1.75, -1.69}, {0.5});
  const auto sol = solver.solve(s, nullptr, tight());
  s.R[0] += 1e-3;
  const auto cold = solver.solve(s, nullptr, tight());
  const auto warm = solver.solve(s, &sol, tight());
  CHECK(warm.iterations <= cold.iterations);
  CHECK(warm.energy.total == doctest::Approx(cold.energy.total).epsilon(1e-13));
}

TEST_CASE("error reporting") {
  CavityHartreeSolver solver(kGrid, ShinMetiuParams{}, {{6.27e-3, 0.05}});
  auto s = make_state({1.0, -1.0}, {0.0});
  const auto sol = solver.solve(s, nullptr, ScfOptions{});

  auto moved = s;
  moved.R[0] = 1.01;
  try {
    solver.nuclear_force(0, sol, moved);
    FAIL("expected stale_solution");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::stale_solution);
  }

  ScfOptions one;
  one.max_iter = 1;
  try {
    solver.solve(s, nullptr, one);
    FAIL("expected no_convergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_convergence);
  }

  auto bad = s;
  bad.q.push_back(0.0);
  CHECK_THROWS_AS(solver.solve(bad, nullptr, ScfOptions{}), Error);
  auto unnormalized = s;
  unnormalized.orient[0] = Vec3(0.0, 0.0, 2.0);
  CHECK_THROWS_AS(solver.solve(unnormalized, nullptr, ScfOptions{}), Error);
  auto outside = s;
  outside.R[0] = 5.0;
  CHECK_THROWS_AS(solver.solve(outside, nullptr, ScfOptions{}), Error);
  CHECK_THROWS_AS(CavityHartreeSolver(kGrid, ShinMetiuParams{}, {{-1.0, 0.1}}), Error);
}
