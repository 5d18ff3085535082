#pragma once

// Shin-Metiu model molecule: one moving proton between two fixed ions at
// +-L/2 and one electron, all interacting through erf-softened Coulomb terms.

#include "cavmd/grid.hpp"

namespace cavmd {

struct ShinMetiuParams {
  double L = 9.45;
  double R_f = 1.511;
  double R_l = 1.511;
  double R_r = 1.511;
  double M = 1836.0;
  double Z = 1.0;

  /// Throws invalid_argument on non-positive lengths or mass.
  void validate() const;
};

/// erf(|d|/R_soft)/|d|, with the limit 2/(sqrt(pi) R_soft) at d = 0.
double soft_coulomb(double d, double R_soft);

/// d/dd of soft_coulomb (odd in d, zero at d = 0).
double soft_coulomb_derivative(double d, double R_soft);

/// V(r_i; R) on the grid. Throws domain_error if |R| >= L/2.
Vector electron_potential(const Grid1D& grid, double R, const ShinMetiuParams& p);

/// 1/|L/2 - R| + 1/|L/2 + R|.
double nuclear_potential(double R, const ShinMetiuParams& p);
double nuclear_potential_gradient(double R, const ShinMetiuParams& p);

/// -dV_en(r_i; R)/dR on the grid; contracting with |psi_i|^2 gives the
/// Hellmann-Feynman electronic force on the moving nucleus.
Vector electron_nuclear_force_kernel(const Grid1D& grid, double R, const ShinMetiuParams& p);

/// mu = Z R - <r>. The fixed ions cancel.
double molecular_dipole(double R, double r_mean, const ShinMetiuParams& p);

/// T + V(R) for the bare molecule.
Matrix bare_electronic_hamiltonian(const Grid1D& grid, const DenseOperator& kinetic, double R,
                                   const ShinMetiuParams& p);

struct BareState {
  double electronic_energy = 0.0;  // lowest eigenvalue of T + V(R)
  double surface_energy = 0.0;     // electronic_energy + nuclear_potential(R)
  double r_mean = 0.0;
  WaveFunction1D psi;
};

/// Bare Born-Oppenheimer ground state at nuclear position R.
BareState bare_ground_state(const Grid1D& grid, const DenseOperator& kinetic, double R,
                            const ShinMetiuParams& p);

/// Position of the minimum of the bare surface E_0(R) on R > 0 (the surface is
/// even in R, so -result is the mirror minimum).
double bare_surface_minimum(const Grid1D& grid, const DenseOperator& kinetic, const ShinMetiuParams& p);

}  // namespace cavmd
