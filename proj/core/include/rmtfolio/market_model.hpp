#pragma once

#include <cstdint>
#include <random>

#include "rmtfolio/linalg.hpp"

namespace rmtfolio::market {

using Rng = std::mt19937_64;

/// Parameters of the factor model r_t = B f_t + sqrt(tau_t) C^{1/2} x_t.
struct FactorModelSpec {
  Eigen::Index m = 100;       ///< assets
  Eigen::Index n = 1000;      ///< samples
  Eigen::Index k = 3;         ///< true factor count, k < m
  double rho = 0.8;           ///< [C]_ij = rho^|i-j|
  double nu = 0.5;            ///< Gamma texture shape
  double factor_snr = 10.0;   ///< per-factor power over per-asset noise power
  std::uint64_t seed = 0;

  /// Throws ParameterError when any invariant is violated.
  void validate() const;
};

struct SyntheticPanel {
  Matrix returns;        ///< m x N
  Matrix true_scatter;   ///< C
  Matrix true_loadings;  ///< B, m x K
  Matrix factors;        ///< K x N draws f_t
  Matrix directions;     ///< m x N draws x_t (unit columns)
  Vector textures;       ///< tau_t > 0
};

/// AR(1)-style Toeplitz scatter with unit diagonal.
Matrix gen_toeplitz_scatter(Eigen::Index m, double rho);

/// i.i.d. Gamma(nu, 1/nu) draws: unit mean, variance 1/nu.
Vector gen_texture(double nu, Eigen::Index n, Rng& rng);

/// Normalized standard Gaussian vector; uniform on the unit sphere.
Vector gen_sphere_vector(Eigen::Index m, Rng& rng);

/// m x k matrix with orthonormal columns drawn from the Haar measure.
Matrix gen_orthonormal_columns(Eigen::Index m, Eigen::Index k, Rng& rng);

/// Draws a full panel. x_t has unit norm, so the noise covariance is
/// C / m and B = sqrt(factor_snr / m) Q puts each factor at factor_snr
/// times the per-asset noise power. Deterministic given spec.seed.
SyntheticPanel gen_panel(const FactorModelSpec& spec);

}  // namespace rmtfolio::market
