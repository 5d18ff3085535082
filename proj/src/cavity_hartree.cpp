#include "cavmd/cavity_hartree.hpp"

#include "cavmd/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cavmd {

namespace {

const Vec3 kCavityAxis = Vec3::UnitZ();

}  // namespace

void EnsembleState::validate(std::size_t n_modes_expected) const {
  const std::size_t n = R.size();
  if (V.size() != n || orient.size() != n) {
    throw Error(ErrorCode::dimension_mismatch, "per-molecule arrays have inconsistent lengths");
  }
  if (q.size() != n_modes_expected || p.size() != n_modes_expected) {
    throw Error(ErrorCode::dimension_mismatch, "per-mode arrays do not match the number of cavity modes");
  }
  for (const auto& o : orient) {
    if (std::abs(o.norm() - 1.0) > 1e-12) {
      throw Error(ErrorCode::invalid_argument, "orientation vector is not normalized");
    }
  }
}

void EnergyBreakdown::refresh_photon_kinetic(const EnsembleState& s) {
  double kinetic = 0.0;
  for (double pa : s.p) kinetic += 0.5 * pa * pa;
  photon += kinetic - photon_kinetic;
  total += kinetic - photon_kinetic;
  photon_kinetic = kinetic;
}

void ScfOptions::validate() const {
  if (!(energy_tol > 0.0)) throw Error(ErrorCode::invalid_argument, "scf.energy_tol must be positive");
  if (!(dipole_tol > 0.0)) throw Error(ErrorCode::invalid_argument, "scf.dipole_tol must be positive");
  if (max_iter < 1) throw Error(ErrorCode::invalid_argument, "scf.max_iter must be >= 1");
  if (!(mixing > 0.0 && mixing <= 1.0)) throw Error(ErrorCode::invalid_argument, "scf.mixing must lie in (0, 1]");
  if (oscillation_window < 1) throw Error(ErrorCode::invalid_argument, "scf.oscillation_window must be >= 1");
  if (anderson_history < 0) throw Error(ErrorCode::invalid_argument, "scf.anderson_history must be >= 0");
}

bool ElectronicSolution::matches(const EnsembleState& s) const {
  if (R != s.R || q != s.q || orient.size() != s.orient.size()) return false;
  for (std::size_t i = 0; i < orient.size(); ++i) {
    if (orient[i] != s.orient[i]) return false;
  }
  return true;
}

double dipole_dipole_energy(const std::vector<std::vector<double>>& xbar) {
  double vdd = 0.0;
  for (const auto& mode : xbar) {
    double sum = 0.0;
    double self = 0.0;
    for (double x : mode) {
      sum += x;
      self += x * x;
    }
    vdd += sum * sum - self;
  }
  return vdd;
}

CavityHartreeSolver::CavityHartreeSolver(Grid1D grid, ShinMetiuParams molecule, std::vector<CavityMode> modes)
    : grid_(std::move(grid)),
      molecule_(molecule),
      modes_(std::move(modes)),
      kinetic_(kinetic_operator(grid_, 1.0)),
      r2_(grid_.points.cwiseAbs2()) {
  molecule_.validate();
  for (const auto& m : modes_) {
    if (!(m.omega > 0.0)) throw Error(ErrorCode::invalid_argument, "cavity omega must be positive");
    if (!(m.lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "cavity lambda must be non-negative");
  }
}

void CavityHartreeSolver::check_state(const EnsembleState& s) const { s.validate(modes_.size()); }

void CavityHartreeSolver::check_solution(const ElectronicSolution& sol, const EnsembleState& s) const {
  if (!sol.matches(s)) {
    throw Error(ErrorCode::stale_solution, "electronic solution does not belong to this configuration");
  }
}

double CavityHartreeSolver::effective_coupling(std::size_t n, std::size_t mode, const EnsembleState& s) const {
  if (n >= s.orient.size() || mode >= modes_.size()) {
    throw Error(ErrorCode::index_out_of_range, "molecule or mode index out of range");
  }
  return modes_[mode].lambda * kCavityAxis.dot(s.orient[n]);
}

double CavityHartreeSolver::nuclear_polarization(const EnsembleState& s, std::size_t mode) const {
  double x = 0.0;
  for (std::size_t n = 0; n < s.R.size(); ++n) {
    x += effective_coupling(n, mode, s) * molecule_.Z * s.R[n];
  }
  return x;
}

std::vector<std::vector<double>> CavityHartreeSolver::mean_polarizations(
    const EnsembleState& s, const std::vector<double>& r_mean) const {
  std::vector<std::vector<double>> xbar(modes_.size(), std::vector<double>(r_mean.size()));
  for (std::size_t a = 0; a < modes_.size(); ++a) {
    for (std::size_t n = 0; n < r_mean.size(); ++n) {
      xbar[a][n] = -effective_coupling(n, a, s) * r_mean[n];
    }
  }
  return xbar;
}

DenseOperator CavityHartreeSolver::dressed_hamiltonian(std::size_t n, const EnsembleState& s,
                                                       const std::vector<std::vector<double>>& xbar) const {
  check_state(s);
  if (n >= s.n_molecules()) throw Error(ErrorCode::index_out_of_range, "molecule index out of range");
  if (xbar.size() != modes_.size()) throw Error(ErrorCode::dimension_mismatch, "one dipole list per mode expected");
  Matrix h = bare_electronic_hamiltonian(grid_, kinetic_, s.R[n], molecule_);
  for (std::size_t a = 0; a < modes_.size(); ++a) {
    if (xbar[a].size() != s.n_molecules()) {
      throw Error(ErrorCode::dimension_mismatch, "one mean dipole per molecule expected");
    }
    double others = 0.0;
    for (std::size_t m = 0; m < xbar[a].size(); ++m) {
      if (m != n) others += xbar[a][m];
    }
    const double lam = effective_coupling(n, a, s);
    const double c = nuclear_polarization(s, a) - modes_[a].omega * s.q[a] + others;
    h.diagonal() += -c * lam * grid_.points + 0.5 * lam * lam * r2_;
  }
  return DenseOperator(std::move(h));
}

namespace {

struct Moments {
  std::vector<double> bare;  // <H_n^e>
  std::vector<double> r;
  std::vector<double> r2;
};

}  // namespace

static EnergyBreakdown assemble_energy(const CavityHartreeSolver& solver, const EnsembleState& s,
                                       const Moments& mom) {
  const auto& mol = solver.molecule();
  const auto& modes = solver.modes();
  EnergyBreakdown e;
  for (std::size_t n = 0; n < s.n_molecules(); ++n) {
    e.bare += mom.bare[n] + nuclear_potential(s.R[n], mol);
  }
  const auto xbar = solver.mean_polarizations(s, mom.r);
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const double X = solver.nuclear_polarization(s, a);
    const double w = modes[a].omega;
    double sum = 0.0;
    for (std::size_t n = 0; n < s.n_molecules(); ++n) {
      const double lam = solver.effective_coupling(n, a, s);
      e.dse_local += 0.5 * lam * lam * mom.r2[n];
      sum += xbar[a][n];
    }
    e.coupling += (X - w * s.q[a]) * sum;
    const double disp = w * s.q[a] - X;
    e.photon_kinetic += 0.5 * s.p[a] * s.p[a];
    e.photon += 0.5 * s.p[a] * s.p[a] + 0.5 * disp * disp;
  }
  e.dipole_dipole = 0.5 * dipole_dipole_energy(xbar);
  e.total = e.bare + e.dse_local + e.coupling + e.dipole_dipole + e.photon;
  return e;
}

EnergyBreakdown CavityHartreeSolver::evaluate_energy(const EnsembleState& s,
                                                     const std::vector<WaveFunction1D>& psi) const {
  check_state(s);
  if (psi.size() != s.n_molecules()) throw Error(ErrorCode::dimension_mismatch, "one orbital per molecule expected");
  Moments mom;
  for (std::size_t n = 0; n < psi.size(); ++n) {
    const Matrix h = bare_electronic_hamiltonian(grid_, kinetic_, s.R[n], molecule_);
    mom.bare.push_back(psi[n].dot(h * psi[n]));
    mom.r.push_back(expectation_diagonal(grid_.points, psi[n]));
    mom.r2.push_back(expectation_diagonal(r2_, psi[n]));
  }
  return assemble_energy(*this, s, mom);
}

namespace {

// Next input dipoles from the current input x and residual f = G(x) - x.
// With history > 0 this is Anderson mixing; the collective mode of a large
// ensemble has a mean-field response N lambda^2 alpha_e of order one, where
// plain iteration barely contracts. Without history it is linear mixing.
// Either way the mixing is halved after `oscillation_window` consecutive
// sweeps whose residual flips sign (linear) or grows (Anderson).
class DipoleMixer {
 public:
  DipoleMixer(std::size_t n, const ScfOptions& opts)
      : beta_(opts.mixing), history_(opts.anderson_history), window_(opts.oscillation_window) {
    dx_.resize(static_cast<Eigen::Index>(n), 0);
    df_.resize(static_cast<Eigen::Index>(n), 0);
  }

  double mixing() const { return beta_; }

  void update(std::vector<double>& r_in, const Vector& f) {
    const Eigen::Map<Vector> x(r_in.data(), static_cast<Eigen::Index>(r_in.size()));
    const double norm = f.squaredNorm();
    if (has_prev_) {
      const bool bad = history_ > 0 ? norm > prev_norm_ : f.dot(f_prev_) < 0.0 && norm > 0.25 * prev_norm_;
      if (bad && ++strikes_ >= window_) {
        beta_ *= 0.5;
        strikes_ = 0;
        dx_.resize(Eigen::NoChange, 0);
        df_.resize(Eigen::NoChange, 0);
      } else if (!bad) {
        strikes_ = 0;
      }
    }

    Vector next = x + beta_ * f;
    if (history_ > 0 && has_prev_) {
      push(x - x_prev_, f - f_prev_);
      const Vector gamma = df_.colPivHouseholderQr().solve(f);
      const Vector candidate = next - (dx_ + beta_ * df_) * gamma;
      if (candidate.allFinite()) {
        next = candidate;
      } else {
        dx_.resize(Eigen::NoChange, 0);
        df_.resize(Eigen::NoChange, 0);
      }
    }
    x_prev_ = x;
    f_prev_ = f;
    prev_norm_ = norm;
    has_prev_ = true;
    Eigen::Map<Vector>(r_in.data(), next.size()) = next;
  }

 private:
  void push(const Vector& dx, const Vector& df) {
    const Eigen::Index cols = dx_.cols();
    if (cols == history_) {
      dx_.leftCols(cols - 1) = dx_.rightCols(cols - 1).eval();
      df_.leftCols(cols - 1) = df_.rightCols(cols - 1).eval();
    } else {
      dx_.conservativeResize(Eigen::NoChange, cols + 1);
      df_.conservativeResize(Eigen::NoChange, cols + 1);
    }
    dx_.rightCols(1) = dx;
    df_.rightCols(1) = df;
  }

  double beta_;
  int history_;
  int window_;
  int strikes_ = 0;
  bool has_prev_ = false;
  double prev_norm_ = 0.0;
  Vector x_prev_, f_prev_;
  Matrix dx_, df_;
};

}  // namespace

ElectronicSolution CavityHartreeSolver::solve(const EnsembleState& s, const ElectronicSolution* guess,
                                              const ScfOptions& opts) const {
  check_state(s);
  opts.validate();
  const std::size_t n_mol = s.n_molecules();
  const std::size_t n_modes = modes_.size();

  std::vector<Matrix> bare(n_mol);
  for (std::size_t n = 0; n < n_mol; ++n) bare[n] = bare_electronic_hamiltonian(grid_, kinetic_, s.R[n], molecule_);

  std::vector<std::vector<double>> lam(n_modes, std::vector<double>(n_mol));
  std::vector<double> field0(n_modes);
  for (std::size_t a = 0; a < n_modes; ++a) {
    for (std::size_t n = 0; n < n_mol; ++n) lam[a][n] = effective_coupling(n, a, s);
    field0[a] = nuclear_polarization(s, a) - modes_[a].omega * s.q[a];
  }

  Moments mom{std::vector<double>(n_mol), std::vector<double>(n_mol), std::vector<double>(n_mol)};
  std::vector<WaveFunction1D> psi(n_mol);
  const bool warm = guess != nullptr && guess->psi.size() == n_mol;
  for (std::size_t n = 0; n < n_mol; ++n) {
    if (warm && guess->psi[n].size() == grid_.points.size()) {
      psi[n] = guess->psi[n];
    } else {
      psi[n] = ground_state(bare[n]).psi;
    }
    mom.bare[n] = psi[n].dot(bare[n] * psi[n]);
    mom.r[n] = expectation_diagonal(grid_.points, psi[n]);
    mom.r2[n] = expectation_diagonal(r2_, psi[n]);
  }
  double e_prev = assemble_energy(*this, s, mom).total;
  std::vector<double> r_in = mom.r;

  std::vector<double> eps(n_mol);
  DipoleMixer mixer(n_mol, opts);
  Vector delta(n_mol);

  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<double> total(n_modes, 0.0);
    for (std::size_t a = 0; a < n_modes; ++a) {
      for (std::size_t n = 0; n < n_mol; ++n) total[a] += -lam[a][n] * r_in[n];
    }
    for (std::size_t n = 0; n < n_mol; ++n) {
      Matrix h = bare[n];
      for (std::size_t a = 0; a < n_modes; ++a) {
        const double others = total[a] + lam[a][n] * r_in[n];
        const double c = field0[a] + others;
        h.diagonal() += -c * lam[a][n] * grid_.points + 0.5 * lam[a][n] * lam[a][n] * r2_;
      }
      auto gs = ground_state(h, psi[n]);
      eps[n] = gs.energy;
      psi[n] = std::move(gs.psi);
      mom.bare[n] = psi[n].dot(bare[n] * psi[n]);
      mom.r[n] = expectation_diagonal(grid_.points, psi[n]);
      mom.r2[n] = expectation_diagonal(r2_, psi[n]);
    }
    const EnergyBreakdown energy = assemble_energy(*this, s, mom);

    for (std::size_t n = 0; n < n_mol; ++n) delta[static_cast<Eigen::Index>(n)] = mom.r[n] - r_in[n];
    const double dr_max = n_mol > 0 ? delta.cwiseAbs().maxCoeff() : 0.0;
    const bool converged = std::abs(energy.total - e_prev) < opts.energy_tol && dr_max < opts.dipole_tol;
    if (converged) {
      ElectronicSolution sol;
      sol.psi = std::move(psi);
      sol.eps = std::move(eps);
      sol.r_mean = mom.r;
      sol.r2_mean = mom.r2;
      sol.energy = energy;
      sol.iterations = it;
      sol.final_mixing = mixer.mixing();
      sol.R = s.R;
      sol.q = s.q;
      sol.orient = s.orient;
      return sol;
    }
    mixer.update(r_in, delta);
    e_prev = energy.total;
  }
  throw Error(ErrorCode::no_convergence,
              "cavity-Hartree SCF did not converge in " + std::to_string(opts.max_iter) + " sweeps");
}

double CavityHartreeSolver::nuclear_force(std::size_t n, const ElectronicSolution& sol,
                                          const EnsembleState& s) const {
  check_solution(sol, s);
  if (n >= s.n_molecules()) throw Error(ErrorCode::index_out_of_range, "molecule index out of range");
  double f = -nuclear_potential_gradient(s.R[n], molecule_);
  f += expectation_diagonal(electron_nuclear_force_kernel(grid_, s.R[n], molecule_), sol.psi[n]);
  const auto xbar = mean_polarizations(s, sol.r_mean);
  for (std::size_t a = 0; a < modes_.size(); ++a) {
    double total = 0.0;
    for (double x : xbar[a]) total += x;
    f += molecule_.Z * effective_coupling(n, a, s) *
         (modes_[a].omega * s.q[a] - nuclear_polarization(s, a) - total);
  }
  return f;
}

double CavityHartreeSolver::photon_force(std::size_t mode, const ElectronicSolution& sol,
                                         const EnsembleState& s) const {
  check_solution(sol, s);
  if (mode >= modes_.size()) throw Error(ErrorCode::index_out_of_range, "mode index out of range");
  const double w = modes_[mode].omega;
  double total = 0.0;
  for (std::size_t n = 0; n < s.n_molecules(); ++n) total += -effective_coupling(n, mode, s) * sol.r_mean[n];
  return -w * w * s.q[mode] + w * nuclear_polarization(s, mode) + w * total;
}

std::vector<double> CavityHartreeSolver::nuclear_forces(const ElectronicSolution& sol,
                                                        const EnsembleState& s) const {
  check_solution(sol, s);
  const std::size_t n_mol = s.n_molecules();
  std::vector<double> drive(modes_.size());
  for (std::size_t a = 0; a < modes_.size(); ++a) {
    double total = 0.0;
    for (std::size_t n = 0; n < n_mol; ++n) total += -effective_coupling(n, a, s) * sol.r_mean[n];
    drive[a] = modes_[a].omega * s.q[a] - nuclear_polarization(s, a) - total;
  }
  std::vector<double> f(n_mol);
  for (std::size_t n = 0; n < n_mol; ++n) {
    double fn = -nuclear_potential_gradient(s.R[n], molecule_) +
                expectation_diagonal(electron_nuclear_force_kernel(grid_, s.R[n], molecule_), sol.psi[n]);
    for (std::size_t a = 0; a < modes_.size(); ++a) fn += molecule_.Z * effective_coupling(n, a, s) * drive[a];
    f[n] = fn;
  }
  return f;
}

std::vector<double> CavityHartreeSolver::photon_forces(const ElectronicSolution& sol,
                                                       const EnsembleState& s) const {
  std::vector<double> f(modes_.size());
  for (std::size_t a = 0; a < modes_.size(); ++a) f[a] = photon_force(a, sol, s);
  return f;
}

LocalShift CavityHartreeSolver::local_polarization_shift(std::size_t n, const EnsembleState& s,
                                                         const ElectronicSolution& sol) const {
  check_solution(sol, s);
  if (n >= s.n_molecules()) throw Error(ErrorCode::index_out_of_range, "molecule index out of range");
  bool coupled = false;
  for (std::size_t a = 0; a < modes_.size(); ++a) coupled = coupled || effective_coupling(n, a, s) != 0.0;
  if (!coupled) return LocalShift{0.0, sol.r_mean[n]};  // identical problems
  const Matrix h = bare_electronic_hamiltonian(grid_, kinetic_, s.R[n], molecule_);
  const auto gs = ground_state(h, sol.psi[n]);
  LocalShift out;
  out.r_bare = expectation_diagonal(grid_.points, gs.psi);
  out.dr = sol.r_mean[n] - out.r_bare;
  return out;
}

std::vector<double> CavityHartreeSolver::local_polarization_shifts(const EnsembleState& s,
                                                                   const ElectronicSolution& sol) const {
  std::vector<double> dr(s.n_molecules());
  for (std::size_t n = 0; n < dr.size(); ++n) dr[n] = local_polarization_shift(n, s, sol).dr;
  return dr;
}

}  // namespace cavmd
