#include "rmtfolio/robust_estimation.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "rmtfolio/errors.hpp"

namespace rmtfolio::robust {

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::trace_m:
      return "trace_m";
    case Normalization::covariance_scale:
      return "covariance_scale";
  }
  return "unknown";
}

Normalization normalization_from_string(std::string_view s) {
  if (s == "trace_m") return Normalization::trace_m;
  if (s == "covariance_scale") return Normalization::covariance_scale;
  throw ParameterError("unknown normalization tag '" + std::string(s) + "'");
}

ScatterMatrix::ScatterMatrix(Matrix values, Normalization normalization)
    : values_(std::move(values)), normalization_(normalization) {
  if (values_.rows() != values_.cols() || values_.rows() == 0) {
    throw ParameterError("scatter matrix must be square and non-empty");
  }
  if (!values_.allFinite()) {
    throw DegenerateError("scatter matrix has non-finite entries");
  }
  if (asymmetry(values_) > 1e-10) {
    throw ParameterError("scatter matrix is not symmetric");
  }
  if (normalization_ == Normalization::trace_m) {
    const double m = static_cast<double>(values_.rows());
    if (std::abs(values_.trace() - m) > 1e-8 * m) {
      throw ParameterError("trace_m scatter matrix must have trace m");
    }
  }
}

bool ScatterMatrix::is_positive_definite() const {
  Eigen::LLT<Matrix> llt(values_);
  return llt.info() == Eigen::Success;
}

void TylerConfig::validate() const {
  if (max_iter < 1) throw ParameterError("tyler: max_iter must be >= 1");
  if (!(tol > 0.0)) throw ParameterError("tyler: tol must be > 0");
  if (!(eigen_floor >= 0.0)) {
    throw ParameterError("tyler: eigen_floor must be >= 0");
  }
}

Matrix demean(const Matrix& panel) {
  if (panel.cols() == 0) return panel;
  return panel.colwise() - panel.rowwise().mean();
}

ScatterMatrix scm(const Matrix& panel) {
  if (panel.rows() == 0 || panel.cols() == 0) {
    throw ParameterError("scm: empty panel");
  }
  const double n = static_cast<double>(panel.cols());
  Matrix s = Matrix::Zero(panel.rows(), panel.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(panel, 1.0 / n);
  s = s.selfadjointView<Eigen::Lower>();
  if (s.cwiseAbs().maxCoeff() == 0.0) {
    throw SingularMatrixError("scm: sample covariance is the zero matrix");
  }
  return ScatterMatrix(std::move(s), Normalization::covariance_scale);
}

namespace {

// Quadratic forms r_t^T C^{-1} r_t for every column.
Vector quadratic_forms(const Eigen::LLT<Matrix>& llt, const Matrix& panel) {
  Matrix z = llt.matrixL().solve(panel);
  return z.colwise().squaredNorm().transpose();
}

Matrix weighted_outer(const Matrix& panel, const Vector& q) {
  const Eigen::Index m = panel.rows();
  const double scale = static_cast<double>(m) / static_cast<double>(panel.cols());
  Matrix scaled = panel * q.cwiseInverse().cwiseSqrt().asDiagonal();
  Matrix out = Matrix::Zero(m, m);
  out.selfadjointView<Eigen::Lower>().rankUpdate(scaled, scale);
  return out.selfadjointView<Eigen::Lower>();
}

}  // namespace

Matrix tyler_map(const Matrix& panel, const Matrix& c) {
  if (c.rows() != panel.rows() || c.cols() != panel.rows()) {
    throw ParameterError("tyler_map: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("tyler_map: scatter is not positive definite");
  }
  return weighted_outer(panel, quadratic_forms(llt, panel));
}

TylerEstimate tyler_detailed(const Matrix& panel, const TylerConfig& cfg) {
  cfg.validate();
  const Eigen::Index m = panel.rows();
  const Eigen::Index n = panel.cols();
  if (m == 0) throw ParameterError("tyler: empty panel");
  if (n <= m) {
    throw InsufficientSamplesError(
        "tyler: need more samples than assets (N=" + std::to_string(n) +
            ", m=" + std::to_string(m) + ")",
        static_cast<long>(m), static_cast<long>(n));
  }
  const Vector norms = panel.colwise().squaredNorm().transpose();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (!(norms[t] > 0.0)) {
      throw DegenerateObservationError(
          "tyler: observation " + std::to_string(t) + " is all zero",
          static_cast<long>(t));
    }
  }

  const double md = static_cast<double>(m);
  Matrix c = Matrix::Identity(m, m);
  double residual = 0.0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success) {
      throw SingularMatrixError("tyler: iterate lost positive definiteness");
    }
    Matrix next = weighted_outer(panel, quadratic_forms(llt, panel));
    next *= md / next.trace();
    residual = (next - c).norm() / c.norm();
    c = std::move(next);
    if (residual < cfg.tol) {
      return TylerEstimate{ScatterMatrix(std::move(c), Normalization::trace_m),
                           it, residual};
    }
  }
  throw ConvergenceError("tyler: no convergence after " +
                             std::to_string(cfg.max_iter) +
                             " iterations (residual " +
                             std::to_string(residual) + ")",
                         residual, cfg.max_iter);
}

ScatterMatrix tyler(const Matrix& panel, const TylerConfig& cfg) {
  return tyler_detailed(panel, cfg).scatter;
}

Matrix toeplitzify(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw ParameterError("toeplitzify: matrix must be square");
  }
  const Eigen::Index m = a.rows();
  const Matrix s = symmetrized(a);
  Vector lag_values(m);
  for (Eigen::Index lag = 0; lag < m; ++lag) {
    lag_values[lag] = s.diagonal(lag).sum() / static_cast<double>(m);
  }
  Matrix out(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      out(i, j) = lag_values[std::abs(i - j)];
    }
  }
  return out;
}

Matrix rescale_trace(const Matrix& a, double target) {
  const double tr = a.trace();
  if (!(std::abs(tr) > 0.0)) {
    throw SingularMatrixError("rescale_trace: zero trace");
  }
  return a * (target / tr);
}

InverseRoot inv_sqrt(const Matrix& s, double eigen_floor) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw ParameterError("inv_sqrt: matrix must be square and non-empty");
  }
  if (!(eigen_floor >= 0.0)) {
    throw ParameterError("inv_sqrt: eigen_floor must be >= 0");
  }
  if (s.cwiseAbs().maxCoeff() == 0.0) {
    throw SingularMatrixError("inv_sqrt: zero matrix");
  }
  EigenSpectrum spec = eigen_symmetric(s);
  const double mean = spec.eigenvalues.mean();
  if (!(mean > 0.0)) {
    throw SingularMatrixError("inv_sqrt: matrix has non-positive mean eigenvalue");
  }
  const double floor = eigen_floor * mean;
  InverseRoot out;
  Vector values = spec.eigenvalues;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] > floor && values[i] > 0.0) continue;
    if (!(floor > 0.0)) {
      throw SingularMatrixError("inv_sqrt: non-positive eigenvalue with zero floor");
    }
    values[i] = floor;
    ++out.floored;
  }
  if (out.floored > 0) {
    out.warnings.push_back("inv_sqrt: " + std::to_string(out.floored) +
                           " eigenvalue(s) floored at " + std::to_string(floor));
  }
  const Vector root = values.cwiseSqrt();
  out.root = reconstruct(spec.eigenvectors, root);
  out.inverse_root = reconstruct(spec.eigenvectors, root.cwiseInverse());
  return out;
}

InverseRoot inv_sqrt(const ScatterMatrix& s, double eigen_floor) {
  return inv_sqrt(s.values(), eigen_floor);
}

Matrix whiten(const Matrix& panel, const Matrix& inverse_root) {
  if (inverse_root.rows() != inverse_root.cols() ||
      inverse_root.cols() != panel.rows()) {
    throw ParameterError("whiten: dimension mismatch between panel (" +
                         std::to_string(panel.rows()) + " rows) and transform");
  }
  return inverse_root * panel;
}

Matrix whiten(const Matrix& panel, const ScatterMatrix& s, double eigen_floor) {
  if (s.dim() != panel.rows()) {
    throw ParameterError("whiten: dimension mismatch");
  }
  return whiten(panel, inv_sqrt(s, eigen_floor).inverse_root);
}

}  // namespace rmtfolio::robust
