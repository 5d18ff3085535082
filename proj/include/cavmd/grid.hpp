#pragma once

// One electron on an equidistant 1D grid: sinc-DVR kinetic energy and a dense
// symmetric eigensolver. Wavefunctions are coefficient vectors normalized as
// sum_i psi_i^2 = 1 (no spacing weight); every expectation value uses that
// convention.

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace cavmd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Grid1D {
  double spacing = 0.0;
  Vector points;  // ascending, centered on 0

  std::size_t size() const { return static_cast<std::size_t>(points.size()); }
};

/// Real symmetric operator in the grid basis.
class DenseOperator {
 public:
  DenseOperator() = default;
  /// Throws invalid_argument if `m` is not square or not symmetric to 1e-12 (relative).
  explicit DenseOperator(Matrix m);

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  /// Adds a diagonal (local potential) term.
  DenseOperator& add_diagonal(const Vector& v);

  static DenseOperator diagonal(const Vector& v);

 private:
  Matrix m_;
};

using WaveFunction1D = Vector;

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column k pairs with eigenvalues[k]
};

struct GroundState {
  double energy = 0.0;
  WaveFunction1D psi;
};

Grid1D make_grid(std::size_t n_points, double spacing);

/// Colbert-Miller sinc-DVR kinetic matrix for a particle of the given mass.
DenseOperator kinetic_operator(const Grid1D& grid, double mass = 1.0);

/// Multiplication by the coordinate.
DenseOperator position_operator(const Grid1D& grid);

/// Full spectrum. Throws numerical_failure if the solver does not converge.
EigenDecomposition diagonalize(const DenseOperator& op);

/// Lowest eigenpair only. The sign of psi is fixed so that its largest
/// component is positive.
GroundState ground_state(const Matrix& symmetric);

/// Warm-started variant: refines `guess` by shifted inverse iteration and falls
/// back to full diagonalization when the refinement cannot certify the result.
GroundState ground_state(const Matrix& symmetric, const WaveFunction1D& guess);

/// psi^T A psi. Throws dimension_mismatch.
double expectation(const DenseOperator& op, const WaveFunction1D& psi);

/// Expectation of a diagonal (grid-local) operator given by its values.
double expectation_diagonal(const Vector& values, const WaveFunction1D& psi);

}  // namespace cavmd
