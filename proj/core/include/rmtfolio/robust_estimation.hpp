#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rmtfolio/linalg.hpp"

namespace rmtfolio::robust {

enum class Normalization {
  trace_m,           ///< scatter normalized so that trace == m
  covariance_scale,  ///< physical covariance units
};

std::string_view to_string(Normalization n);
Normalization normalization_from_string(std::string_view s);

/// Symmetric m x m matrix tagged with its normalization. Construction checks
/// symmetry (1e-10 relative) and, for trace_m, the trace (1e-8). Positive
/// definiteness is queried, not enforced: a rank-deficient SCM is legal.
class ScatterMatrix {
 public:
  ScatterMatrix(Matrix values, Normalization normalization);

  const Matrix& values() const noexcept { return values_; }
  Normalization normalization() const noexcept { return normalization_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }

  bool is_positive_definite() const;

 private:
  Matrix values_;
  Normalization normalization_;
};

struct TylerConfig {
  int max_iter = 200;
  double tol = 1e-8;          ///< relative Frobenius change between sweeps
  double eigen_floor = 1e-10; ///< relative to the mean eigenvalue

  void validate() const;
};

struct TylerEstimate {
  ScatterMatrix scatter;
  int iterations = 0;
  double residual = 0.0;  ///< last relative Frobenius change
};

/// Subtracts each row's (asset's) mean across the window.
Matrix demean(const Matrix& panel);

/// Sample covariance R R^T / N of an already-centred panel.
ScatterMatrix scm(const Matrix& panel);

/// One application of the fixed-point map
///   C -> (m/N) sum_t r_t r_t^T / (r_t^T C^{-1} r_t),
/// without trace normalization. `c` must be positive definite.
Matrix tyler_map(const Matrix& panel, const Matrix& c);

/// Tyler's M-estimator of scatter, started from identity and renormalized to
/// trace m after every sweep. Requires N > m and no all-zero column.
TylerEstimate tyler_detailed(const Matrix& panel, const TylerConfig& cfg = {});
ScatterMatrix tyler(const Matrix& panel, const TylerConfig& cfg = {});

/// Biased Toeplitz rectification: symmetrizes, then fills lag k with the sum
/// of the k-th upper diagonal divided by m (not by m - k). Trace is preserved.
Matrix toeplitzify(const Matrix& a);

/// a * target / trace(a)
Matrix rescale_trace(const Matrix& a, double target);

struct InverseRoot {
  Matrix inverse_root;  ///< W with W S W = I
  Matrix root;          ///< S^{1/2} built from the same (floored) spectrum
  int floored = 0;      ///< eigenvalues lifted to the floor
  std::vector<std::string> warnings;
};

/// Inverse square root via eigendecomposition. Eigenvalues below
/// eigen_floor * mean(eigenvalues) are lifted to that floor and reported.
InverseRoot inv_sqrt(const ScatterMatrix& s, double eigen_floor = 1e-10);
InverseRoot inv_sqrt(const Matrix& s, double eigen_floor = 1e-10);

/// Column-wise W r_t.
Matrix whiten(const Matrix& panel, const Matrix& inverse_root);
Matrix whiten(const Matrix& panel, const ScatterMatrix& s,
              double eigen_floor = 1e-10);

}  // namespace rmtfolio::robust
