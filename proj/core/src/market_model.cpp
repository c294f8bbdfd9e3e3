#include "rmtfolio/market_model.hpp"

#include <cmath>
#include <string>

#include "rmtfolio/errors.hpp"

namespace rmtfolio::market {

void FactorModelSpec::validate() const {
  if (m < 1) throw ParameterError("factor model: m must be >= 1");
  if (n < 1) throw ParameterError("factor model: N must be >= 1");
  if (k < 0 || k >= m) {
    throw ParameterError("factor model: K must satisfy 0 <= K < m (K=" +
                         std::to_string(k) + ", m=" + std::to_string(m) + ")");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ParameterError("factor model: rho must lie in [0, 1)");
  }
  if (!(nu > 0.0)) throw ParameterError("factor model: nu must be > 0");
  if (!(factor_snr >= 0.0)) {
    throw ParameterError("factor model: factor_snr must be >= 0");
  }
}

Matrix gen_toeplitz_scatter(Eigen::Index m, double rho) {
  if (m < 1) throw ParameterError("gen_toeplitz_scatter: m must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ParameterError("gen_toeplitz_scatter: rho must lie in [0, 1)");
  }
  Vector lags(m);
  double p = 1.0;
  for (Eigen::Index lag = 0; lag < m; ++lag) {
    lags[lag] = p;
    p *= rho;
  }
  Matrix c(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      c(i, j) = lags[std::abs(i - j)];
    }
  }
  return c;
}

Vector gen_texture(double nu, Eigen::Index n, Rng& rng) {
  if (!(nu > 0.0)) throw ParameterError("gen_texture: nu must be > 0");
  std::gamma_distribution<double> gamma(nu, 1.0 / nu);
  Vector tau(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double v = 0.0;
    // Small shapes can underflow to an exact zero.
    while (!(v > 0.0)) v = gamma(rng);
    tau[t] = v;
  }
  return tau;
}

Vector gen_sphere_vector(Eigen::Index m, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(m);
  double norm = 0.0;
  while (!(norm > 0.0)) {
    for (Eigen::Index i = 0; i < m; ++i) x[i] = normal(rng);
    norm = x.norm();
  }
  return x / norm;
}

Matrix gen_orthonormal_columns(Eigen::Index m, Eigen::Index k, Rng& rng) {
  if (k == 0) return Matrix(m, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(m, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(m, k);
  // Sign fix against R's diagonal gives the Haar distribution.
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

SyntheticPanel gen_panel(const FactorModelSpec& spec) {
  spec.validate();
  const Eigen::Index m = spec.m;
  const Eigen::Index n = spec.n;
  const Eigen::Index k = spec.k;

  Rng rng(spec.seed);
  SyntheticPanel p;
  p.true_scatter = gen_toeplitz_scatter(m, spec.rho);
  const Matrix root = sqrtm_symmetric(p.true_scatter);

  p.true_loadings = gen_orthonormal_columns(m, k, rng) *
                    std::sqrt(spec.factor_snr / static_cast<double>(m));
  p.textures = gen_texture(spec.nu, n, rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  p.factors.resize(k, n);
  p.directions.resize(m, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) p.factors(j, t) = normal(rng);
    p.directions.col(t) = gen_sphere_vector(m, rng);
  }

  p.returns = root * p.directions;
  for (Eigen::Index t = 0; t < n; ++t) {
    p.returns.col(t) *= std::sqrt(p.textures[t]);
  }
  if (k > 0) p.returns.noalias() += p.true_loadings * p.factors;
  return p;
}

}  // namespace rmtfolio::market
