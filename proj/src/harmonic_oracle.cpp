#include "cavmd/harmonic_oracle.hpp"

#include "cavmd/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cavmd {

void HarmonicEnsembleParams::validate() const {
  if (n_molecules < 1) throw Error(ErrorCode::invalid_argument, "n_molecules must be at least 1");
  if (!(omega_vib > 0.0) || !(omega_cavity > 0.0) || !(mass > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "frequencies and mass must be positive");
  }
  if (!(lambda >= 0.0) || !(alpha_e >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "lambda and alpha_e must be non-negative");
  }
}

DenseOperator build_hessian(const HarmonicEnsembleParams& p) {
  p.validate();
  const auto n = static_cast<Eigen::Index>(p.n_molecules);
  const double D = 1.0 + static_cast<double>(p.n_molecules) * p.lambda * p.lambda * p.alpha_e;
  const double nn = p.lambda * p.lambda * p.mu_prime * p.mu_prime / (p.mass * D);
  const double nq = -p.lambda * p.mu_prime * p.omega_cavity / (std::sqrt(p.mass) * D);

  Matrix h = Matrix::Constant(n + 1, n + 1, nn);
  h.diagonal().head(n).array() += p.omega_vib * p.omega_vib;
  h.col(n).head(n).setConstant(nq);
  h.row(n).head(n).setConstant(nq);
  h(n, n) = p.omega_cavity * p.omega_cavity / D;
  return DenseOperator(std::move(h));
}

NormalModes normal_modes(const HarmonicEnsembleParams& p) {
  const auto hessian = build_hessian(p);
  const auto eig = diagonalize(hessian);
  const Eigen::Index last = hessian.dim() - 1;
  NormalModes modes;
  for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
    const double w2 = eig.eigenvalues[k];
    if (w2 < 0.0) {
      throw Error(ErrorCode::imaginary_frequency, fmt::format("normal mode {} has omega^2 = {}", k, w2));
    }
    modes.frequencies.push_back(std::sqrt(w2));
    modes.participation.push_back(eig.eigenvectors(last, k) * eig.eigenvectors(last, k));
  }
  return modes;
}

PolaritonPrediction polariton_prediction(const HarmonicEnsembleParams& p) {
  PolaritonPrediction out;
  out.modes = normal_modes(p);
  std::vector<std::size_t> order(out.modes.frequencies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.modes.participation[a] > out.modes.participation[b];
  });
  const double w1 = out.modes.frequencies[order[0]];
  const double w2 = out.modes.frequencies[order.size() > 1 ? order[1] : order[0]];
  out.omega_LP = std::min(w1, w2);
  out.omega_UP = std::max(w1, w2);
  out.rabi = out.omega_UP - out.omega_LP;
  out.midpoint = 0.5 * (out.omega_LP + out.omega_UP);
  return out;
}

double verlet_frequency(double omega, double dt) {
  if (!(omega >= 0.0) || !(dt > 0.0) || !(omega * dt < 2.0)) {
    throw Error(ErrorCode::invalid_argument, "verlet_frequency needs 0 <= omega dt < 2");
  }
  return 2.0 / dt * std::asin(0.5 * omega * dt);
}

PolaritonPrediction verlet_prediction(const PolaritonPrediction& p, double dt) {
  PolaritonPrediction out = p;
  for (auto& w : out.modes.frequencies) w = verlet_frequency(w, dt);
  out.omega_LP = verlet_frequency(p.omega_LP, dt);
  out.omega_UP = verlet_frequency(p.omega_UP, dt);
  out.rabi = out.omega_UP - out.omega_LP;
  out.midpoint = 0.5 * (out.omega_LP + out.omega_UP);
  return out;
}

HarmonicMoleculeFit fit_harmonic_molecule(const Grid1D& grid, const ShinMetiuParams& p) {
  const auto kinetic = kinetic_operator(grid, 1.0);
  HarmonicMoleculeFit fit;
  fit.r_min = bare_surface_minimum(grid, kinetic, p);

  const double h = 1e-3;
  const auto surface = [&](double R) { return bare_ground_state(grid, kinetic, R, p).surface_energy; };
  const auto dipole = [&](double R) {
    return molecular_dipole(R, bare_ground_state(grid, kinetic, R, p).r_mean, p);
  };
  const double curvature = (surface(fit.r_min + h) - 2.0 * surface(fit.r_min) + surface(fit.r_min - h)) / (h * h);
  fit.omega_vib = std::sqrt(curvature / p.M);
  fit.mu_prime = (dipole(fit.r_min + h) - dipole(fit.r_min - h)) / (2.0 * h);

  const Matrix bare = bare_electronic_hamiltonian(grid, kinetic, fit.r_min, p);
  const auto field_energy = [&](double f) {
    Matrix m = bare;
    m.diagonal() += f * grid.points;
    return ground_state(m).energy;
  };
  const double df = 1e-4;
  fit.alpha_e = -(field_energy(df) - 2.0 * field_energy(0.0) + field_energy(-df)) / (df * df);
  return fit;
}

}  // namespace cavmd
