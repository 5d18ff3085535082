#pragma once

// Langevin propagation of nuclei and cavity displacement coordinates on the
// cavity-Hartree surface, plus overdamped rotational diffusion of the
// molecular orientations.

#include "cavmd/cavity_hartree.hpp"
#include "cavmd/config.hpp"
#include "cavmd/thermostat.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cavmd {

/// Frequency used to size the initial nuclear displacements around the bare minimum.
inline constexpr double kInitialVibrationalOmega = 6.27e-3;

/// One independent normal stream per stochastic degree of freedom, each
/// seeded from (master seed, stream kind, index).
class RngStreams {
 public:
  RngStreams(std::uint64_t seed, std::size_t n_molecules, std::size_t n_modes);

  double nuclear(std::size_t n) { return draw(nuclear_[n]); }
  double photon(std::size_t a) { return draw(photon_[a]); }
  Vec3 orientation(std::size_t n) {
    return {draw(orientation_[3 * n]), draw(orientation_[3 * n + 1]), draw(orientation_[3 * n + 2])};
  }
  /// Stream reserved for initial conditions.
  double initial() { return draw(init_); }
  double initial_uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(init_.engine); }

 private:
  struct Stream {
    std::mt19937_64 engine;
    std::normal_distribution<double> normal;
  };
  static Stream make(std::uint64_t seed, std::uint64_t kind, std::uint64_t index);
  static double draw(Stream& s) { return s.normal(s.engine); }

  std::vector<Stream> nuclear_;
  std::vector<Stream> photon_;
  std::vector<Stream> orientation_;
  Stream init_;
};

/// Building blocks of the Bussi-Parrinello splitting, usable on any set of
/// coordinates. `noise(i)` must return a standard normal for coordinate i.
namespace langevin {

/// v <- c1 v + sqrt((1 - c1^2) kT / m) xi with c1 = exp(-gamma dt / 2).
void ou_half_step(std::span<double> v, std::span<const double> mass, const ThermostatParams& t,
                  const std::function<double(std::size_t)>& noise);
void kick(std::span<double> v, std::span<const double> force, std::span<const double> mass, double dt);
void drift(std::span<double> x, std::span<const double> v, double dt);

/// One full O-B-A-B-O step; `force(x, f)` fills f at positions x.
void step(std::span<double> x, std::span<double> v, std::span<const double> mass, std::vector<double>& f,
          const std::function<void(std::span<const double>, std::vector<double>&)>& force,
          const ThermostatParams& t, const std::function<double(std::size_t)>& noise);

}  // namespace langevin

/// Rotational Brownian step: n <- n/|n| + sqrt(dt tau_R) S x n/|n|, then renormalized.
void rotation_step(std::vector<Vec3>& orient, double tau_R, double dt, RngStreams& rng);

/// Advances nuclei, photon coordinates and (when enabled) orientations by one
/// step and returns the converged electronic solution at the new configuration.
/// `sol` must be converged for `s` on entry.
ElectronicSolution langevin_step(EnsembleState& s, const ElectronicSolution& sol,
                                 const CavityHartreeSolver& solver, const ThermostatParams& thermo,
                                 const ScfOptions& scf, RngStreams& rng);

CavityHartreeSolver make_solver(const ExperimentConfig& config);

EnsembleState initialize(const ExperimentConfig& config, const CavityHartreeSolver& solver, RngStreams& rng);

double nuclear_kinetic_energy(const EnsembleState& s, double mass);
double photon_kinetic_energy(const EnsembleState& s);

struct TrajectoryFailure {
  std::string code;
  std::size_t step = 0;
  std::string message;
};

/// Sampled observables. Per-molecule series are indexed [molecule][sample];
/// dipoles are projected on the cavity axis, (Z R_n - <r>_n)(e_z . n_n).
struct Trajectory {
  std::size_t n_molecules = 0;
  std::size_t n_modes = 0;
  double dt = 0.0;
  std::size_t stride = 1;
  bool has_molecule_dipoles = false;
  bool has_dr = false;

  std::vector<std::size_t> step;
  std::vector<double> time;
  std::vector<std::vector<double>> q;  // [mode][sample]
  std::vector<double> dipole_total;
  std::vector<std::vector<double>> dipole;  // [molecule][sample]
  std::vector<std::vector<double>> dr;      // [molecule][sample]
  std::vector<double> ekin_nuclear;
  std::vector<double> ekin_photon;
  std::vector<EnergyBreakdown> energy;
  std::vector<int> scf_iterations;

  std::optional<TrajectoryFailure> failure;

  std::size_t n_samples() const { return time.size(); }
};

using ProgressCallback = std::function<void(std::size_t step, std::size_t n_steps)>;

/// Initializes, then alternates {record, langevin_step}. A failing step ends
/// the run; the trajectory up to that point is returned with `failure` set.
Trajectory run_trajectory(const ExperimentConfig& config, const ProgressCallback& progress = {});

struct ForceCheck {
  double max_relative_error = 0.0;
  std::size_t n_forces = 0;
};

/// Samples `n_samples` thermal configurations of `config` (seeds seed, seed+1, ...)
/// and compares every analytic force with a central finite difference of the
/// reconverged potential energy, using tight SCF tolerances.
ForceCheck check_forces(const ExperimentConfig& config, int n_samples, double step = 1e-4);

}  // namespace cavmd
