#pragma once

// Normal modes of N identical harmonic molecules coupled to one cavity mode,
// including the full dipole self-energy and an adiabatically eliminated
// harmonic electronic polarizability.
//
// With D = 1 + N lambda^2 alpha_e the effective potential is
//   U = sum_n M omega_vib^2 R_n^2 / 2 + (omega_c q - lambda mu' sum_n R_n)^2 / (2 D),
// so in mass-weighted coordinates (sqrt(M) R_n, q):
//   H_nn = omega_vib^2 + lambda^2 mu'^2 / (M D),   H_nm = lambda^2 mu'^2 / (M D),
//   H_nq = -lambda mu' omega_c / (sqrt(M) D),      H_qq = omega_c^2 / D.

#include "cavmd/grid.hpp"
#include "cavmd/shin_metiu.hpp"

#include <cstddef>
#include <vector>

namespace cavmd {

struct HarmonicEnsembleParams {
  std::size_t n_molecules = 1;
  double omega_vib = 0.0;
  double mu_prime = 0.0;
  double mass = 1836.0;
  double omega_cavity = 0.0;
  double lambda = 0.0;
  double alpha_e = 0.0;

  void validate() const;
};

struct NormalModes {
  std::vector<double> frequencies;    // ascending
  std::vector<double> participation;  // cavity weight of each mode
};

struct PolaritonPrediction {
  NormalModes modes;
  double omega_LP = 0.0;
  double omega_UP = 0.0;
  double rabi = 0.0;
  double midpoint = 0.0;
};

DenseOperator build_hessian(const HarmonicEnsembleParams& p);

/// Throws imaginary_frequency if the Hessian has a negative eigenvalue.
NormalModes normal_modes(const HarmonicEnsembleParams& p);

/// LP/UP are the two modes with the largest cavity participation.
PolaritonPrediction polariton_prediction(const HarmonicEnsembleParams& p);

/// Frequency at which velocity Verlet with step dt propagates a harmonic mode
/// of angular frequency omega: (2 / dt) asin(omega dt / 2). Throws
/// invalid_argument when omega dt >= 2 (unstable).
double verlet_frequency(double omega, double dt);

/// The prediction with every normal-mode frequency mapped through verlet_frequency.
PolaritonPrediction verlet_prediction(const PolaritonPrediction& p, double dt);

struct HarmonicMoleculeFit {
  double r_min = 0.0;      // bare surface minimum (positive branch)
  double omega_vib = 0.0;  // sqrt(E_0''(r_min) / M)
  double mu_prime = 0.0;   // d(Z R - <r>)/dR at r_min
  double alpha_e = 0.0;    // -d^2 E / df^2 for a perturbation f r at r_min
};

/// Harmonic parameters of the bare Shin-Metiu molecule by finite differences.
HarmonicMoleculeFit fit_harmonic_molecule(const Grid1D& grid, const ShinMetiuParams& p);

}  // namespace cavmd
