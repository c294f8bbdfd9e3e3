#include "rmtfolio/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rmtfolio/errors.hpp"

namespace rmtfolio {

EigenSpectrum eigen_symmetric(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw ParameterError("eigen_symmetric: matrix must be square");
  }
  const Eigen::Index m = a.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw SingularMatrixError("eigen_symmetric: eigensolver failed");
  }
  // Solver returns ascending order; stable sort on descending value.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Vector& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return ev[i] > ev[j]; });

  EigenSpectrum out;
  out.eigenvalues.resize(m);
  out.eigenvectors.resize(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    out.eigenvalues[k] = ev[order[static_cast<std::size_t>(k)]];
    out.eigenvectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

Matrix reconstruct(const Matrix& eigenvectors, const Vector& values) {
  Matrix out = eigenvectors * values.asDiagonal() * eigenvectors.transpose();
  return symmetrized(out);
}

Matrix sqrtm_symmetric(const Matrix& a) {
  EigenSpectrum s = eigen_symmetric(a);
  Vector root = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return reconstruct(s.eigenvectors, root);
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == a.cols() && asymmetry(a) == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

Matrix symmetrized(const Matrix& a) {
  return 0.5 * (a + a.transpose());
}

double asymmetry(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

}  // namespace rmtfolio
