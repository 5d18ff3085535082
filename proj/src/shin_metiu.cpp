#include "cavmd/shin_metiu.hpp"

#include "cavmd/error.hpp"

#include <boost/math/tools/minima.hpp>

#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <string>

namespace cavmd {

namespace {

// Below this |d|/R_soft the closed forms lose digits to cancellation in the
// derivative; the truncated Taylor series is exact to round-off there.
constexpr double kSeriesCutoff = 0.05;

// erf(u)/u = 2/sqrt(pi) * sum_k (-1)^k u^{2k} / (k! (2k+1))
constexpr std::array<double, 7> kSeries = {
    1.0, -1.0 / 3.0, 1.0 / 10.0, -1.0 / 42.0, 1.0 / 216.0, -1.0 / 1320.0, 1.0 / 9360.0,
};

double erf_over_u(double u) {
  if (std::abs(u) < kSeriesCutoff) {
    const double u2 = u * u;
    double acc = 0.0;
    for (auto it = kSeries.rbegin(); it != kSeries.rend(); ++it) acc = acc * u2 + *it;
    return std::numbers::inv_sqrtpi * 2.0 * acc;
  }
  return std::erf(std::abs(u)) / std::abs(u);
}

double erf_over_u_derivative(double u) {
  if (std::abs(u) < kSeriesCutoff) {
    const double u2 = u * u;
    double acc = 0.0;
    for (std::size_t k = kSeries.size() - 1; k >= 1; --k) {
      acc = acc * u2 + 2.0 * static_cast<double>(k) * kSeries[k];
    }
    return std::numbers::inv_sqrtpi * 2.0 * acc * u;
  }
  const double a = std::abs(u);
  const double g = 2.0 * std::numbers::inv_sqrtpi * std::exp(-u * u) / a - std::erf(a) / (a * a);
  return u > 0.0 ? g : -g;
}

void check_geometry(double R, const ShinMetiuParams& p) {
  if (!(std::abs(R) < 0.5 * p.L)) {
    throw Error(ErrorCode::domain_error,
                "nuclear coordinate R=" + std::to_string(R) + " outside |R| < L/2");
  }
}

}  // namespace

void ShinMetiuParams::validate() const {
  if (!(L > 0.0) || !(R_f > 0.0) || !(R_l > 0.0) || !(R_r > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "Shin-Metiu lengths must be positive");
  }
  if (!(M > 0.0)) throw Error(ErrorCode::invalid_argument, "nuclear mass must be positive");
}

double soft_coulomb(double d, double R_soft) { return erf_over_u(d / R_soft) / R_soft; }

double soft_coulomb_derivative(double d, double R_soft) {
  return erf_over_u_derivative(d / R_soft) / (R_soft * R_soft);
}

Vector electron_potential(const Grid1D& grid, double R, const ShinMetiuParams& p) {
  check_geometry(R, p);
  const double half = 0.5 * p.L;
  Vector v(grid.points.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double r = grid.points[i];
    v[i] = -soft_coulomb(r - R, p.R_f) - soft_coulomb(r - half, p.R_r) - soft_coulomb(r + half, p.R_l);
  }
  return v;
}

double nuclear_potential(double R, const ShinMetiuParams& p) {
  check_geometry(R, p);
  const double half = 0.5 * p.L;
  return p.Z * (1.0 / (half - R) + 1.0 / (half + R));
}

double nuclear_potential_gradient(double R, const ShinMetiuParams& p) {
  check_geometry(R, p);
  const double half = 0.5 * p.L;
  return p.Z * (1.0 / ((half - R) * (half - R)) - 1.0 / ((half + R) * (half + R)));
}

Vector electron_nuclear_force_kernel(const Grid1D& grid, double R, const ShinMetiuParams& p) {
  check_geometry(R, p);
  // V_en = -softC(r - R)  =>  dV_en/dR = softC'(r - R)
  Vector k(grid.points.size());
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    k[i] = -soft_coulomb_derivative(grid.points[i] - R, p.R_f);
  }
  return k;
}

double molecular_dipole(double R, double r_mean, const ShinMetiuParams& p) { return p.Z * R - r_mean; }

Matrix bare_electronic_hamiltonian(const Grid1D& grid, const DenseOperator& kinetic, double R,
                                   const ShinMetiuParams& p) {
  Matrix h = kinetic.matrix();
  h.diagonal() += electron_potential(grid, R, p);
  return h;
}

BareState bare_ground_state(const Grid1D& grid, const DenseOperator& kinetic, double R,
                            const ShinMetiuParams& p) {
  auto gs = ground_state(bare_electronic_hamiltonian(grid, kinetic, R, p));
  BareState s;
  s.electronic_energy = gs.energy;
  s.surface_energy = gs.energy + nuclear_potential(R, p);
  s.r_mean = expectation_diagonal(grid.points, gs.psi);
  s.psi = std::move(gs.psi);
  return s;
}

double bare_surface_minimum(const Grid1D& grid, const DenseOperator& kinetic, const ShinMetiuParams& p) {
  const auto energy = [&](double R) { return bare_ground_state(grid, kinetic, R, p).surface_energy; };
  const double upper = 0.5 * p.L * 0.95;
  const auto [x, fx] = boost::math::tools::brent_find_minima(energy, 0.0, upper, std::numeric_limits<double>::digits / 2);
  (void)fx;
  return x;
}

}  // namespace cavmd
