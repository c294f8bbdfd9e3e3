#pragma once

#include <cstdint>

#include "rmtfolio/errors.hpp"
#include "rmtfolio/linalg.hpp"

namespace rmtfolio::alloc {

/// Long-only fully-invested weights: every w_i in [0, 1], sum within 1e-8.
class WeightVector {
 public:
  /// Validates; throws ParameterError when off the simplex.
  explicit WeightVector(Vector weights);

  const Vector& values() const noexcept { return weights_; }
  Eigen::Index size() const noexcept { return weights_.size(); }
  double operator[](Eigen::Index i) const { return weights_[i]; }

  static WeightVector equal(Eigen::Index m);

 private:
  Vector weights_;
};

/// Covariance with its volatility vector s_i = sqrt(Sigma_ii).
class CovarianceInput {
 public:
  /// Rejects non-symmetric, non-positive-definite input and any asset with
  /// zero variance (DegenerateError).
  explicit CovarianceInput(Matrix sigma);

  const Matrix& sigma() const noexcept { return sigma_; }
  const Vector& vols() const noexcept { return vols_; }
  Eigen::Index size() const noexcept { return sigma_.rows(); }

  /// D^{-1} Sigma D^{-1} with D = diag(vols).
  Matrix correlation() const;

 private:
  Matrix sigma_;
  Vector vols_;
};

/// Variety (diversification) ratio w^T s / sqrt(w^T Sigma w).
double variety_ratio(const Vector& w, const CovarianceInput& cov);
double variety_ratio(const WeightVector& w, const CovarianceInput& cov);

/// Euclidean projection onto {w : w_i >= 0, sum w_i = 1}.
WeightVector project_simplex(const Vector& v);

struct OptimizerConfig {
  int starts = 10;            ///< random starts on top of the equal-weight start
  int max_iter = 5000;        ///< per start
  double tol_vr = 1e-6;       ///< relative VR tolerance used by callers and ties
  double kkt_tol = 1e-10;     ///< projected-gradient stationarity
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimizationResult {
  WeightVector weights;
  double variety_ratio = 0.0;
  int iterations = 0;          ///< of the winning start
  int total_iterations = 0;
  double kkt_residual = 0.0;   ///< ||w - P(w + grad log VR)||_inf at the winner
  int best_start = 0;          ///< 0 is the equal-weight start
};

class OptimizerConvergenceError : public ConvergenceError {
 public:
  OptimizerConvergenceError(const std::string& what, Vector last_iterate,
                            double kkt_residual, int iterations)
      : ConvergenceError(what, kkt_residual, iterations),
        last_iterate_(std::move(last_iterate)) {}

  const Vector& last_iterate() const noexcept { return last_iterate_; }

 private:
  Vector last_iterate_;
};

/// Long-only Maximum Variety portfolio by projected gradient ascent on
/// log VR with Barzilai-Borwein trial steps and Armijo backtracking, run
/// from the equal-weight point plus `starts` random simplex points.
OptimizationResult maximize_variety_detailed(const CovarianceInput& cov,
                                             const OptimizerConfig& cfg = {});
WeightVector maximize_variety(const CovarianceInput& cov,
                              const OptimizerConfig& cfg = {});

/// Independent route: long-only minimum variance on the correlation matrix
/// (accelerated projected gradient), then w_i proportional to z_i / s_i.
WeightVector maximize_variety_via_correlation(const CovarianceInput& cov);

/// Exhaustive search over the simplex lattice with spacing `step` (1/step
/// must be an integer). Refuses m > 4.
WeightVector brute_force_vr(const CovarianceInput& cov, double step);

}  // namespace rmtfolio::alloc
