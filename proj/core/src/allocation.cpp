#include "rmtfolio/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

namespace rmtfolio::alloc {

WeightVector::WeightVector(Vector weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) throw ParameterError("weights: empty vector");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ParameterError("weights: w[" + std::to_string(i) + "] = " +
                           std::to_string(w) + " outside [0, 1]");
    }
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-8) {
    throw ParameterError("weights: sum is not 1");
  }
}

WeightVector WeightVector::equal(Eigen::Index m) {
  return WeightVector(Vector::Constant(m, 1.0 / static_cast<double>(m)));
}

CovarianceInput::CovarianceInput(Matrix sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() == 0) {
    throw ParameterError("covariance: matrix must be square and non-empty");
  }
  if (!sigma_.allFinite()) throw DegenerateError("covariance: non-finite entries");
  if (asymmetry(sigma_) > 1e-10) {
    throw ParameterError("covariance: matrix is not symmetric");
  }
  sigma_ = symmetrized(sigma_);
  const Vector diag = sigma_.diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag[i] > 0.0)) {
      throw DegenerateError("covariance: asset " + std::to_string(i) +
                            " has zero variance");
    }
  }
  Eigen::LLT<Matrix> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw DegenerateError("covariance: matrix is not positive definite");
  }
  vols_ = diag.cwiseSqrt();
}

Matrix CovarianceInput::correlation() const {
  const Vector inv = vols_.cwiseInverse();
  return symmetrized(inv.asDiagonal() * sigma_ * inv.asDiagonal());
}

double variety_ratio(const Vector& w, const CovarianceInput& cov) {
  if (w.size() != cov.size()) {
    throw ParameterError("variety_ratio: dimension mismatch");
  }
  const double var = w.dot(cov.sigma() * w);
  if (!(var > 0.0)) {
    throw DegenerateError("variety_ratio: portfolio variance is not positive");
  }
  return w.dot(cov.vols()) / std::sqrt(var);
}

double variety_ratio(const WeightVector& w, const CovarianceInput& cov) {
  return variety_ratio(w.values(), cov);
}

namespace {

// Sort-based projection; returns the raw vector before validation.
Vector project_raw(const Vector& v) {
  const Eigen::Index m = v.size();
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  Vector w = (v.array() - theta).cwiseMax(0.0).matrix();
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return w.cwiseMin(1.0);
}

}  // namespace

WeightVector project_simplex(const Vector& v) {
  if (v.size() == 0) throw ParameterError("project_simplex: empty vector");
  if (!v.allFinite()) throw ParameterError("project_simplex: non-finite input");
  return WeightVector(project_raw(v));
}

void OptimizerConfig::validate() const {
  if (starts < 0) throw ParameterError("optimizer: starts must be >= 0");
  if (max_iter < 1) throw ParameterError("optimizer: max_iter must be >= 1");
  if (!(tol_vr > 0.0)) throw ParameterError("optimizer: tol_vr must be > 0");
  if (!(kkt_tol > 0.0)) throw ParameterError("optimizer: kkt_tol must be > 0");
}

namespace {

struct Objective {
  const Matrix& sigma;
  const Vector& vols;

  double value(const Vector& w) const {
    return std::log(w.dot(vols)) - 0.5 * std::log(w.dot(sigma * w));
  }

  Vector gradient(const Vector& w) const {
    const Vector sw = sigma * w;
    return vols / w.dot(vols) - sw / w.dot(sw);
  }

  // value(w + d) - value(w) without the cancellation of subtracting two logs.
  double increment(const Vector& w, const Vector& d) const {
    const Vector sw = sigma * w;
    const double a = w.dot(vols);
    const double q = w.dot(sw);
    const double dq = 2.0 * d.dot(sw) + d.dot(sigma * d);
    return std::log1p(d.dot(vols) / a) - 0.5 * std::log1p(dq / q);
  }
};

double kkt_residual(const Vector& w, const Vector& g) {
  return (w - project_raw(w + g)).cwiseAbs().maxCoeff();
}

struct StartOutcome {
  Vector w;
  double value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  double kkt = std::numeric_limits<double>::infinity();
  bool converged = false;
};

StartOutcome ascend(const Objective& f, Vector w, const OptimizerConfig& cfg) {
  constexpr double armijo = 1e-4;
  constexpr double min_step = 1e-20;
  constexpr double max_step = 1e20;

  StartOutcome out;
  Vector g = f.gradient(w);
  double step = 1.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    out.iterations = it;
    out.kkt = kkt_residual(w, g);
    if (out.kkt < cfg.kkt_tol) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    Vector next;
    double gain = 0.0;
    for (double a = step; a >= min_step; a *= 0.5) {
      next = project_raw(w + a * g);
      const Vector d = next - w;
      gain = f.increment(w, d);
      if (gain >= armijo * g.dot(d)) {
        accepted = true;
        break;
      }
    }
    if (!accepted || (next - w).cwiseAbs().maxCoeff() == 0.0) {
      // No representable ascent step left: stationary at machine precision.
      out.converged = true;
      break;
    }
    const Vector gnext = f.gradient(next);
    const Vector s = next - w;
    const Vector y = gnext - g;
    const double sy = s.dot(y);
    // Ascent on a locally concave function gives s.y < 0.
    step = sy < 0.0 ? std::clamp(-s.squaredNorm() / sy, min_step, max_step)
                    : std::min(step * 2.0, max_step);
    w = std::move(next);
    g = gnext;
    out.iterations = it + 1;
  }
  if (!out.converged) out.kkt = kkt_residual(w, g);
  out.value = f.value(w);
  out.w = std::move(w);
  return out;
}

Vector random_simplex_point(Eigen::Index m, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = expo(rng);
  return v / v.sum();
}

}  // namespace

OptimizationResult maximize_variety_detailed(const CovarianceInput& cov,
                                             const OptimizerConfig& cfg) {
  cfg.validate();
  const Eigen::Index m = cov.size();
  if (m == 1) {
    return OptimizationResult{WeightVector(Vector::Ones(1)), 1.0, 0, 0, 0.0, 0};
  }
  const Objective f{cov.sigma(), cov.vols()};
  std::mt19937_64 rng(cfg.seed);

  int best = -1;
  StartOutcome winner;
  StartOutcome last_failed;
  int total = 0;
  for (int start = 0; start <= cfg.starts; ++start) {
    Vector w0 = start == 0 ? Vector::Constant(m, 1.0 / static_cast<double>(m))
                           : random_simplex_point(m, rng);
    StartOutcome r = ascend(f, std::move(w0), cfg);
    total += r.iterations;
    if (!r.converged) {
      last_failed = std::move(r);
      continue;
    }
    // Strict improvement beyond rounding; ties keep the lower start index.
    if (best < 0 || r.value > winner.value + 1e-15 * std::abs(winner.value)) {
      best = start;
      winner = std::move(r);
    }
  }
  if (best < 0) {
    throw OptimizerConvergenceError(
        "maximize_variety: no start converged within " +
            std::to_string(cfg.max_iter) + " iterations (KKT residual " +
            std::to_string(last_failed.kkt) + ")",
        last_failed.w, last_failed.kkt, cfg.max_iter);
  }
  WeightVector weights(project_raw(winner.w));
  const double vr = variety_ratio(weights, cov);
  return OptimizationResult{std::move(weights), vr,     winner.iterations,
                            total,              winner.kkt, best};
}

WeightVector maximize_variety(const CovarianceInput& cov, const OptimizerConfig& cfg) {
  return maximize_variety_detailed(cov, cfg).weights;
}

WeightVector maximize_variety_via_correlation(const CovarianceInput& cov) {
  const Eigen::Index m = cov.size();
  if (m == 1) return WeightVector(Vector::Ones(1));
  const Matrix p = cov.correlation();
  Eigen::SelfAdjointEigenSolver<Matrix> es(p, Eigen::EigenvaluesOnly);
  const double lipschitz = 2.0 * es.eigenvalues().maxCoeff();

  // FISTA with adaptive restart on min z^T P z over the simplex.
  Vector z = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Vector y = z;
  double t = 1.0;
  constexpr int max_iter = 200000;
  for (int it = 0; it < max_iter; ++it) {
    const Vector gy = 2.0 * p * y;
    Vector next = project_raw(y - gy / lipschitz);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if ((next - z).dot(gy) > 0.0) {
      // Momentum points uphill: restart.
      t = 1.0;
      y = z;
      continue;
    }
    y = next + ((t - 1.0) / t_next) * (next - z);
    const double change = (next - z).cwiseAbs().maxCoeff();
    z = std::move(next);
    t = t_next;
    if (change < 1e-15) break;
  }
  Vector w = z.cwiseQuotient(cov.vols());
  w /= w.sum();
  return WeightVector(project_raw(w));
}

WeightVector brute_force_vr(const CovarianceInput& cov, double step) {
  const Eigen::Index m = cov.size();
  if (m > 4) throw ParameterError("brute_force_vr: refusing m > 4");
  if (!(step > 0.0) || step > 1.0) {
    throw ParameterError("brute_force_vr: step must lie in (0, 1]");
  }
  const long units = std::lround(1.0 / step);
  if (std::abs(static_cast<double>(units) * step - 1.0) > 1e-9) {
    throw ParameterError("brute_force_vr: 1/step must be an integer");
  }
  if (m == 1) return WeightVector(Vector::Ones(1));

  Vector best_w;
  double best_vr = -std::numeric_limits<double>::infinity();
  std::vector<long> counts(static_cast<std::size_t>(m), 0);
  Vector w(m);
  // Enumerate compositions of `units` into m non-negative parts.
  std::function<void(Eigen::Index, long)> recurse = [&](Eigen::Index i, long left) {
    if (i == m - 1) {
      counts[static_cast<std::size_t>(i)] = left;
      for (Eigen::Index j = 0; j < m; ++j) {
        w[j] = static_cast<double>(counts[static_cast<std::size_t>(j)]) /
               static_cast<double>(units);
      }
      const double var = w.dot(cov.sigma() * w);
      if (!(var > 0.0)) return;
      const double vr = w.dot(cov.vols()) / std::sqrt(var);
      if (vr > best_vr) {
        best_vr = vr;
        best_w = w;
      }
      return;
    }
    for (long c = 0; c <= left; ++c) {
      counts[static_cast<std::size_t>(i)] = c;
      recurse(i + 1, left - c);
    }
  };
  recurse(0, units);
  return WeightVector(best_w);
}

}  // namespace rmtfolio::alloc
