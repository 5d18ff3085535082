#include "cavmd/dynamics.hpp"

#include "cavmd/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cavmd {

void ThermostatParams::validate() const {
  if (!(kT >= 0.0)) throw Error(ErrorCode::invalid_argument, "kT must be non-negative");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::invalid_argument, "gamma must be non-negative");
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
  if (!(tau_R >= 0.0)) throw Error(ErrorCode::invalid_argument, "tau_R must be non-negative");
}

RngStreams::Stream RngStreams::make(std::uint64_t seed, std::uint64_t kind, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Stream{std::mt19937_64(seq), std::normal_distribution<double>(0.0, 1.0)};
}

RngStreams::RngStreams(std::uint64_t seed, std::size_t n_molecules, std::size_t n_modes)
    : init_(make(seed, 0, 0)) {
  nuclear_.reserve(n_molecules);
  for (std::size_t n = 0; n < n_molecules; ++n) nuclear_.push_back(make(seed, 1, n));
  photon_.reserve(n_modes);
  for (std::size_t a = 0; a < n_modes; ++a) photon_.push_back(make(seed, 2, a));
  orientation_.reserve(3 * n_molecules);
  for (std::size_t k = 0; k < 3 * n_molecules; ++k) orientation_.push_back(make(seed, 3, k));
}

namespace langevin {

void ou_half_step(std::span<double> v, std::span<const double> mass, const ThermostatParams& t,
                  const std::function<double(std::size_t)>& noise) {
  const double c1 = std::exp(-0.5 * t.gamma * t.dt);
  if (c1 == 1.0) return;  // gamma = 0: the map is the identity
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double c2 = std::sqrt((1.0 - c1 * c1) * t.kT / mass[i]);
    v[i] = c1 * v[i] + c2 * noise(i);
  }
}

void kick(std::span<double> v, std::span<const double> force, std::span<const double> mass, double dt) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += dt * force[i] / mass[i];
}

void drift(std::span<double> x, std::span<const double> v, double dt) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dt * v[i];
}

void step(std::span<double> x, std::span<double> v, std::span<const double> mass, std::vector<double>& f,
          const std::function<void(std::span<const double>, std::vector<double>&)>& force,
          const ThermostatParams& t, const std::function<double(std::size_t)>& noise) {
  ou_half_step(v, mass, t, noise);
  kick(v, f, mass, 0.5 * t.dt);
  drift(x, v, t.dt);
  force(x, f);
  kick(v, f, mass, 0.5 * t.dt);
  ou_half_step(v, mass, t, noise);
}

}  // namespace langevin

void rotation_step(std::vector<Vec3>& orient, double tau_R, double dt, RngStreams& rng) {
  if (tau_R == 0.0) return;
  const double amplitude = std::sqrt(dt * tau_R);
  for (std::size_t n = 0; n < orient.size(); ++n) {
    const Vec3 u = orient[n].normalized();
    const Vec3 s = rng.orientation(n);
    orient[n] = (u + amplitude * s.cross(u)).normalized();
  }
}

namespace {

// Nuclei and photon coordinates share one O-B-A-B-O sequence; the photon
// coordinates have unit mass.
void ou_ensemble(EnsembleState& s, double mass, const ThermostatParams& t, RngStreams& rng) {
  const std::vector<double> masses(s.V.size(), mass);
  const std::vector<double> unit(s.p.size(), 1.0);
  langevin::ou_half_step(s.V, masses, t, [&rng](std::size_t n) { return rng.nuclear(n); });
  langevin::ou_half_step(s.p, unit, t, [&rng](std::size_t a) { return rng.photon(a); });
}

void kick_ensemble(EnsembleState& s, const std::vector<double>& fn, const std::vector<double>& fq, double mass,
                   double dt) {
  for (std::size_t n = 0; n < s.V.size(); ++n) s.V[n] += dt * fn[n] / mass;
  for (std::size_t a = 0; a < s.p.size(); ++a) s.p[a] += dt * fq[a];
}

}  // namespace

ElectronicSolution langevin_step(EnsembleState& s, const ElectronicSolution& sol,
                                 const CavityHartreeSolver& solver, const ThermostatParams& thermo,
                                 const ScfOptions& scf, RngStreams& rng) {
  const double mass = solver.molecule().M;
  const double half = 0.5 * thermo.dt;

  ou_ensemble(s, mass, thermo, rng);
  kick_ensemble(s, solver.nuclear_forces(sol, s), solver.photon_forces(sol, s), mass, half);

  for (std::size_t n = 0; n < s.R.size(); ++n) {
    s.R[n] += thermo.dt * s.V[n];
    if (!(std::abs(s.R[n]) < 0.5 * solver.molecule().L)) {
      throw Error(ErrorCode::domain_error,
                  "nucleus " + std::to_string(n) + " left the region |R| < L/2 (R=" + std::to_string(s.R[n]) + ")");
    }
  }
  for (std::size_t a = 0; a < s.q.size(); ++a) s.q[a] += thermo.dt * s.p[a];
  if (thermo.rotations_enabled) rotation_step(s.orient, thermo.tau_R, thermo.dt, rng);
  s.time += thermo.dt;

  ElectronicSolution next = solver.solve(s, &sol, scf);
  kick_ensemble(s, solver.nuclear_forces(next, s), solver.photon_forces(next, s), mass, half);
  ou_ensemble(s, mass, thermo, rng);
  next.energy.refresh_photon_kinetic(s);
  return next;
}

CavityHartreeSolver make_solver(const ExperimentConfig& config) {
  return CavityHartreeSolver(make_grid(config.grid.n_points, config.grid.spacing), config.molecule, config.cavity);
}

EnsembleState initialize(const ExperimentConfig& config, const CavityHartreeSolver& solver, RngStreams& rng) {
  config.validate();
  const std::size_t N = config.ensemble.N;
  const auto& mol = config.molecule;
  const double kT = config.thermo.kT;
  const double r_min = bare_surface_minimum(solver.grid(), solver.kinetic(), mol);
  const double sigma_R = std::sqrt(kT / (mol.M * kInitialVibrationalOmega * kInitialVibrationalOmega));

  EnsembleState s;
  s.R.resize(N);
  s.V.resize(N);
  s.orient.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    double well = r_min;
    if (config.ensemble.initial_well == InitialWell::random && rng.initial_uniform() < 0.5) well = -r_min;
    s.R[n] = well + sigma_R * rng.initial();
    s.V[n] = std::sqrt(kT / mol.M) * rng.initial();
    if (config.ensemble.orientation == OrientationMode::aligned) {
      s.orient[n] = Vec3::UnitZ();
    } else {
      Vec3 v;
      do {
        v = Vec3(rng.initial(), rng.initial(), rng.initial());
      } while (v.norm() < 1e-8);
      s.orient[n] = v.normalized();
    }
  }
  for (const auto& mode : config.cavity) {
    s.q.push_back(std::sqrt(kT) / mode.omega * rng.initial());
    s.p.push_back(std::sqrt(kT) * rng.initial());
  }
  return s;
}

double nuclear_kinetic_energy(const EnsembleState& s, double mass) {
  double e = 0.0;
  for (double v : s.V) e += 0.5 * mass * v * v;
  return e;
}

double photon_kinetic_energy(const EnsembleState& s) {
  double e = 0.0;
  for (double p : s.p) e += 0.5 * p * p;
  return e;
}

namespace {

void record(Trajectory& traj, std::size_t step, const EnsembleState& s, const ElectronicSolution& sol,
            const CavityHartreeSolver& solver, const ExperimentConfig& config) {
  traj.step.push_back(step);
  traj.time.push_back(s.time);
  for (std::size_t a = 0; a < s.q.size(); ++a) traj.q[a].push_back(s.q[a]);
  double total = 0.0;
  for (std::size_t n = 0; n < s.R.size(); ++n) {
    const double projected = molecular_dipole(s.R[n], sol.r_mean[n], solver.molecule()) * s.orient[n].z();
    total += projected;
    if (traj.has_molecule_dipoles) traj.dipole[n].push_back(projected);
  }
  traj.dipole_total.push_back(total);
  if (traj.has_dr) {
    const auto dr = solver.local_polarization_shifts(s, sol);
    for (std::size_t n = 0; n < dr.size(); ++n) traj.dr[n].push_back(dr[n]);
  }
  traj.ekin_nuclear.push_back(nuclear_kinetic_energy(s, config.molecule.M));
  traj.ekin_photon.push_back(photon_kinetic_energy(s));
  traj.energy.push_back(sol.energy);
  traj.scf_iterations.push_back(sol.iterations);
}

}  // namespace

Trajectory run_trajectory(const ExperimentConfig& config, const ProgressCallback& progress) {
  config.validate();
  const auto solver = make_solver(config);
  const std::size_t N = config.ensemble.N;
  RngStreams rng(config.seed, N, config.cavity.size());

  Trajectory traj;
  traj.n_molecules = N;
  traj.n_modes = config.cavity.size();
  traj.dt = config.thermo.dt;
  traj.stride = config.run.stride;
  traj.has_molecule_dipoles = config.run.record_molecule_dipoles;
  traj.has_dr = config.run.polarization_diagnostics;
  traj.q.resize(traj.n_modes);
  if (traj.has_molecule_dipoles) traj.dipole.resize(N);
  if (traj.has_dr) traj.dr.resize(N);

  std::size_t step = 0;
  try {
    EnsembleState state = initialize(config, solver, rng);
    ElectronicSolution sol = solver.solve(state, nullptr, config.scf);
    for (;; ++step) {
      if (step >= config.run.burn_in && (step - config.run.burn_in) % config.run.stride == 0) {
        record(traj, step, state, sol, solver, config);
      }
      if (progress) progress(step, config.run.n_steps);
      if (step == config.run.n_steps) break;
      sol = langevin_step(state, sol, solver, config.thermo, config.scf, rng);
    }
  } catch (const Error& e) {
    traj.failure = TrajectoryFailure{std::string(to_string(e.code())), step, e.what()};
  }
  return traj;
}

ForceCheck check_forces(const ExperimentConfig& config, int n_samples, double step) {
  ExperimentConfig tight = config;
  tight.scf.energy_tol = 1e-13;
  tight.scf.dipole_tol = 1e-11;
  tight.scf.max_iter = std::max(config.scf.max_iter, 1000);
  const auto solver = make_solver(tight);
  const double h = step;

  ForceCheck out;
  const auto record = [&out](double analytic, double numeric) {
    out.max_relative_error =
        std::max(out.max_relative_error, std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-12));
    ++out.n_forces;
  };
  for (int k = 0; k < n_samples; ++k) {
    const std::uint64_t seed = tight.seed + static_cast<std::uint64_t>(k);
    RngStreams rng(seed, tight.ensemble.N, tight.cavity.size());
    const auto s = initialize(tight, solver, rng);
    const auto sol = solver.solve(s, nullptr, tight.scf);
    const auto energy = [&](const EnsembleState& x) { return solver.solve(x, &sol, tight.scf).energy.potential(); };

    const auto fn = solver.nuclear_forces(sol, s);
    for (std::size_t n = 0; n < s.n_molecules(); ++n) {
      auto sp = s, sm = s;
      sp.R[n] += h;
      sm.R[n] -= h;
      record(fn[n], -(energy(sp) - energy(sm)) / (2 * h));
    }
    const auto fq = solver.photon_forces(sol, s);
    for (std::size_t a = 0; a < s.n_modes(); ++a) {
      auto sp = s, sm = s;
      sp.q[a] += h;
      sm.q[a] -= h;
      record(fq[a], -(energy(sp) - energy(sm)) / (2 * h));
    }
  }
  return out;
}

}  // namespace cavmd
