#pragma once

#include <Eigen/Dense>

namespace rmtfolio {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenpairs of a real symmetric matrix, eigenvalues in descending order.
struct EigenSpectrum {
  Vector eigenvalues;
  Matrix eigenvectors;  ///< column i pairs with eigenvalues[i]

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// Symmetric eigendecomposition sorted descending. Only the lower triangle of
/// `a` is read. Ties keep the solver's order.
EigenSpectrum eigen_symmetric(const Matrix& a);

/// V diag(values) V^T, symmetrized.
Matrix reconstruct(const Matrix& eigenvectors, const Vector& values);

/// Principal square root of a symmetric positive semi-definite matrix.
/// Negative eigenvalues (rounding noise) are clamped to zero.
Matrix sqrtm_symmetric(const Matrix& a);

/// Largest singular value.
double spectral_norm(const Matrix& a);

/// (a + a^T) / 2
Matrix symmetrized(const Matrix& a);

/// max |a_ij - a_ji| / max(1, max |a_ij|)
double asymmetry(const Matrix& a);

}  // namespace rmtfolio
