#include "cavmd/grid.hpp"

#include "cavmd/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cavmd {

namespace {

void fix_sign(WaveFunction1D& psi) {
  Eigen::Index imax = 0;
  psi.cwiseAbs().maxCoeff(&imax);
  if (psi[imax] < 0.0) psi = -psi;
}

GroundState dense_ground_state(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::numerical_failure, "eigensolver did not converge");
  }
  GroundState gs{es.eigenvalues()[0], es.eigenvectors().col(0)};
  fix_sign(gs.psi);
  return gs;
}

// Left-looking Cholesky of (h - sigma) into the lower triangle of l. Eigen's
// blocked LLT carries too much overhead at the matrix sizes used here.
bool shifted_cholesky(const Matrix& h, double sigma, Matrix& l) {
  const Eigen::Index n = h.rows();
  l = h;
  l.diagonal().array() -= sigma;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j > 0) {
      l.col(j).tail(n - j).noalias() -= l.block(j, 0, n - j, j) * l.row(j).head(j).transpose();
    }
    const double d = l(j, j);
    if (!(d > 0.0)) return false;
    const double root = std::sqrt(d);
    l.col(j).tail(n - j) /= root;
  }
  return true;
}

void cholesky_solve(const Matrix& l, Vector& x) {
  l.triangularView<Eigen::Lower>().solveInPlace(x);
  l.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
}

// Shifted inverse iteration from a nearby vector. A successful Cholesky
// factorization of (H - sigma) proves sigma lies below the whole spectrum, and
// a second one just below the converged Rayleigh quotient proves it is the
// lowest eigenvalue. Returns false when either proof fails.
bool refine_ground_state(const Matrix& h, const WaveFunction1D& guess, GroundState& out) {
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  const double residual_tol = 1e-12 * scale;

  Vector x = guess.normalized();
  Vector hx = h * x;
  double rho = x.dot(hx);
  double shift = 1e-4 * scale;
  Matrix l;
  for (int attempt = 0;; ++attempt) {
    if (shifted_cholesky(h, rho - shift, l)) break;
    if (attempt == 3) return false;
    shift *= 30.0;
  }

  for (int it = 0; it < 60; ++it) {
    cholesky_solve(l, x);
    x.normalize();
    hx.noalias() = h * x;
    rho = x.dot(hx);
    if ((hx - rho * x).norm() < residual_tol) {
      if (!shifted_cholesky(h, rho - 1e-9 * scale, l)) return false;
      fix_sign(x);
      out = GroundState{rho, std::move(x)};
      return true;
    }
  }
  return false;
}

}  // namespace

DenseOperator::DenseOperator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw Error(ErrorCode::invalid_argument, "operator matrix must be square");
  }
  const double scale = m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0;
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300)) {
    throw Error(ErrorCode::invalid_argument, "operator matrix is not symmetric");
  }
}

DenseOperator& DenseOperator::add_diagonal(const Vector& v) {
  if (v.size() != m_.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "diagonal term has wrong length");
  }
  m_.diagonal() += v;
  return *this;
}

DenseOperator DenseOperator::diagonal(const Vector& v) {
  return DenseOperator(Matrix(v.asDiagonal()));
}

Grid1D make_grid(std::size_t n_points, double spacing) {
  if (n_points < 3) {
    throw Error(ErrorCode::invalid_argument, "grid needs at least 3 points");
  }
  if (!(spacing > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "grid spacing must be positive");
  }
  Grid1D g;
  g.spacing = spacing;
  g.points.resize(static_cast<Eigen::Index>(n_points));
  const double center = 0.5 * static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    g.points[static_cast<Eigen::Index>(i)] = (static_cast<double>(i) - center) * spacing;
  }
  return g;
}

DenseOperator kinetic_operator(const Grid1D& grid, double mass) {
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "mass must be positive");
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double pref = 1.0 / (mass * grid.spacing * grid.spacing);
  Matrix t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        t(i, j) = pref * std::numbers::pi * std::numbers::pi / 6.0;
      } else {
        const auto d = static_cast<double>(i - j);
        const double sign = ((i - j) % 2 == 0) ? 1.0 : -1.0;
        t(i, j) = pref * sign / (d * d);
      }
    }
  }
  return DenseOperator(std::move(t));
}

DenseOperator position_operator(const Grid1D& grid) {
  return DenseOperator::diagonal(grid.points);
}

EigenDecomposition diagonalize(const DenseOperator& op) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(op.matrix());
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::numerical_failure, "eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

GroundState ground_state(const Matrix& symmetric) {
  return dense_ground_state(symmetric);
}

GroundState ground_state(const Matrix& symmetric, const WaveFunction1D& guess) {
  GroundState gs;
  if (guess.size() == symmetric.rows() && guess.squaredNorm() > 0.0 &&
      refine_ground_state(symmetric, guess, gs)) {
    return gs;
  }
  return dense_ground_state(symmetric);
}

double expectation(const DenseOperator& op, const WaveFunction1D& psi) {
  if (psi.size() != op.dim()) {
    throw Error(ErrorCode::dimension_mismatch,
                "wavefunction length " + std::to_string(psi.size()) + " does not match operator dimension " +
                    std::to_string(op.dim()));
  }
  return psi.dot(op.matrix() * psi);
}

double expectation_diagonal(const Vector& values, const WaveFunction1D& psi) {
  if (psi.size() != values.size()) {
    throw Error(ErrorCode::dimension_mismatch, "wavefunction length does not match grid");
  }
  return psi.cwiseAbs2().dot(values);
}

}  // namespace cavmd
