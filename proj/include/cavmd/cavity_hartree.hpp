#pragma once

// Self-consistent cavity-Hartree electronic structure for an ensemble of
// Shin-Metiu molecules coupled to classical cavity displacement coordinates.
//
// Conventions: each mode is polarized along z; molecule n lies along its unit
// orientation n_n, so its coupling is lambda_{a,n} = lambda_a (e_z . n_n).
// The electronic polarization operator is x_{n,a} = -lambda_{a,n} r and the
// nuclear polarization is X_a = sum_n lambda_{a,n} Z R_n.

#include "cavmd/grid.hpp"
#include "cavmd/shin_metiu.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <vector>

namespace cavmd {

using Vec3 = Eigen::Vector3d;

struct CavityMode {
  double omega = 0.0;   // hartree
  double lambda = 0.0;  // a.u.
};

struct EnsembleState {
  std::vector<double> R;       // moving-nucleus coordinates (bohr)
  std::vector<double> V;       // nuclear velocities
  std::vector<double> q;       // displacement coordinates, one per mode
  std::vector<double> p;       // conjugate momenta
  std::vector<Vec3> orient;    // unit vectors, one per molecule
  double time = 0.0;

  std::size_t n_molecules() const { return R.size(); }
  std::size_t n_modes() const { return q.size(); }
  /// Throws dimension_mismatch / invalid_argument on inconsistent arrays or non-unit orientations.
  void validate(std::size_t n_modes_expected) const;
};

struct EnergyBreakdown {
  double bare = 0.0;           // sum_n <H_n^e> + H_n^n
  double dse_local = 0.0;      // sum_{n,a} <x_{n,a}^2>/2
  double coupling = 0.0;       // sum_{n,a} (X_a - omega_a q_a) <x_{n,a}>
  double dipole_dipole = 0.0;  // V_dd / 2
  double photon = 0.0;         // sum_a p_a^2/2 + (omega_a q_a - X_a)^2/2
  double photon_kinetic = 0.0; // sum_a p_a^2/2, already contained in photon
  double total = 0.0;

  /// total minus the photon kinetic part: the potential that generates the forces.
  double potential() const { return total - photon_kinetic; }

  /// Replaces the photon kinetic part with the one of `s`. The electronic
  /// problem does not depend on p, so this is all a momentum update changes.
  void refresh_photon_kinetic(const EnsembleState& s);
};

struct ScfOptions {
  double energy_tol = 1e-7;   // hartree, change of total energy between sweeps
  double dipole_tol = 1e-8;   // bohr, change of every <r>_n between sweeps
  int max_iter = 200;
  double mixing = 1.0;        // linear mixing of the mean dipoles fed to the next sweep
  int oscillation_window = 5; // diverging sweeps in a row before the mixing is halved
  int anderson_history = 5;   // previous sweeps used by Anderson mixing; 0 = linear mixing

  void validate() const;
};

struct ElectronicSolution {
  std::vector<WaveFunction1D> psi;
  std::vector<double> eps;      // dressed eigenvalues (double-count the dipole-dipole term)
  std::vector<double> r_mean;   // <r>_n
  std::vector<double> r2_mean;  // <r^2>_n
  EnergyBreakdown energy;
  int iterations = 0;
  double final_mixing = 1.0;

  // Classical configuration the solution belongs to.
  std::vector<double> R;
  std::vector<double> q;
  std::vector<Vec3> orient;

  bool matches(const EnsembleState& s) const;
};

/// Bare-problem reference for one molecule: <r> of the lambda = 0 ground state.
struct LocalShift {
  double dr = 0.0;
  double r_bare = 0.0;
};

/// V_dd = sum_a sum_n <x_{n,a}> sum_{m != n} <x_{m,a}>; `xbar[a][n]`.
double dipole_dipole_energy(const std::vector<std::vector<double>>& xbar);

class CavityHartreeSolver {
 public:
  CavityHartreeSolver(Grid1D grid, ShinMetiuParams molecule, std::vector<CavityMode> modes);

  const Grid1D& grid() const { return grid_; }
  const ShinMetiuParams& molecule() const { return molecule_; }
  const std::vector<CavityMode>& modes() const { return modes_; }
  const DenseOperator& kinetic() const { return kinetic_; }

  double effective_coupling(std::size_t n, std::size_t mode, const EnsembleState& s) const;
  double nuclear_polarization(const EnsembleState& s, std::size_t mode) const;

  /// H_n^e + sum_a [c_{n,a} x_{n,a} + x_{n,a}^2 / 2] with
  /// c_{n,a} = X_a - omega_a q_a + sum_{m != n} xbar[a][m].
  DenseOperator dressed_hamiltonian(std::size_t n, const EnsembleState& s,
                                    const std::vector<std::vector<double>>& xbar) const;

  /// Energy functional evaluated for arbitrary normalized trial orbitals.
  EnergyBreakdown evaluate_energy(const EnsembleState& s, const std::vector<WaveFunction1D>& psi) const;

  /// Throws no_convergence when max_iter sweeps do not reach the tolerances.
  ElectronicSolution solve(const EnsembleState& s, const ElectronicSolution* guess,
                           const ScfOptions& opts) const;

  double nuclear_force(std::size_t n, const ElectronicSolution& sol, const EnsembleState& s) const;
  double photon_force(std::size_t mode, const ElectronicSolution& sol, const EnsembleState& s) const;
  std::vector<double> nuclear_forces(const ElectronicSolution& sol, const EnsembleState& s) const;
  std::vector<double> photon_forces(const ElectronicSolution& sol, const EnsembleState& s) const;

  LocalShift local_polarization_shift(std::size_t n, const EnsembleState& s,
                                      const ElectronicSolution& sol) const;
  std::vector<double> local_polarization_shifts(const EnsembleState& s, const ElectronicSolution& sol) const;

  /// <x_{n,a}> for every mode and molecule, from <r>_n.
  std::vector<std::vector<double>> mean_polarizations(const EnsembleState& s,
                                                      const std::vector<double>& r_mean) const;

 private:
  void check_state(const EnsembleState& s) const;
  void check_solution(const ElectronicSolution& sol, const EnsembleState& s) const;

  Grid1D grid_;
  ShinMetiuParams molecule_;
  std::vector<CavityMode> modes_;
  DenseOperator kinetic_;
  Vector r2_;  // r_i^2 on the grid
};

}  // namespace cavmd
