#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "rmtfolio/errors.hpp"
#include "rmtfolio/linalg.hpp"
#include "rmtfolio/market_model.hpp"
#include "rmtfolio/rmt_denoise.hpp"
#include "rmtfolio/robust_estimation.hpp"
#include "support/oracles.hpp"

using namespace rmtfolio;
using namespace rmtfolio::rmt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("mp upper bound") {
  CHECK(mp_upper_bound(0.1) == doctest::Approx(1.7325).epsilon(1e-4));
  CHECK(mp_upper_bound(0.25) == doctest::Approx(2.25));
  CHECK(mp_upper_bound(1.0) == doctest::Approx(4.0));
  CHECK(std::abs(mp_upper_bound(1e-12) - 1.0) < 1e-5);
  CHECK_THROWS_AS(mp_upper_bound(0.0), ParameterError);
  CHECK_THROWS_AS(mp_upper_bound(-0.5), ParameterError);
  for (int i = 1; i <= 1000; ++i) {
    const double c = i / 100.0;  // (0, 10]
    const double root = std::sqrt(c);
    CHECK(std::abs(mp_upper_bound(c) - (1 + root) * (1 + root)) < 1e-12);
  }
}

TEST_CASE("select_order counts strictly above the threshold") {
  CHECK(select_order(vec({3.0, 2.0, 1.5, 1.0}), 1.7325) == 2);
  CHECK(select_order(vec({1.7325, 1.0}), 1.7325) == 0);
  CHECK(select_order(vec({1.0, 0.5}), 1.7325) == 0);
  CHECK(select_order(vec({5.0, 4.0}), 1.7325) == 2);
}

TEST_CASE("clip_spectrum: examples") {
  const Vector a = clip_spectrum(vec({5.0, 1.0, 0.5, 0.5}), 1);
  CHECK(a[0] == doctest::Approx(5.0));
  for (int i = 1; i < 4; ++i) CHECK(a[i] == doctest::Approx(2.0 / 3.0));

  const Vector b = clip_spectrum(vec({2.0, 1.0, 1.0}), 0);
  for (int i = 0; i < 3; ++i) CHECK(b[i] == doctest::Approx(4.0 / 3.0));

  const Vector c = vec({3.0, 2.0, 1.0});
  CHECK(clip_spectrum(c, 3) == c);

  // Literal rule spreads the top-k sum over the m - k slots.
  const Vector d = clip_spectrum(vec({5.0, 1.0, 0.5, 0.5}), 1, ClipRule::literal);
  for (int i = 1; i < 4; ++i) CHECK(d[i] == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("clip_spectrum: invalid inputs") {
  CHECK_THROWS_AS(clip_spectrum(vec({1.0, 2.0}), 0), ParameterError);  // ascending
  CHECK_THROWS_AS(clip_spectrum(vec({2.0, 1.0}), 3), ParameterError);
  CHECK_THROWS_AS(clip_spectrum(vec({2.0, 1.0}), -1), ParameterError);
  CHECK_THROWS_AS(clip_spectrum(vec({0.0, 0.0}), 0, ClipRule::literal), DegenerateError);
}

TEST_CASE("clip_spectrum: trace and top-k preserved on random spectra") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index m = 2 + trial % 20;
    Vector s(m);
    for (Eigen::Index i = 0; i < m; ++i) s[i] = u(rng);
    std::sort(s.data(), s.data() + m, std::greater<>());
    const Eigen::Index k = trial % m;
    const Vector c = clip_spectrum(s, k);
    CHECK(std::abs(c.sum() - s.sum()) < 1e-12 * s.sum());
    for (Eigen::Index i = 0; i < k; ++i) CHECK(c[i] == s[i]);
    for (Eigen::Index i = k + 1; i < m; ++i) CHECK(c[i] == c[k]);
  }
}

TEST_CASE("clean_covariance: one strong factor") {
  market::FactorModelSpec spec;
  spec.m = 20;
  spec.n = 400;
  spec.k = 1;
  spec.factor_snr = 20.0;
  spec.seed = 5;
  const auto panel = market::gen_panel(spec);
  const CleaningReport r = clean_covariance(panel.returns);
  CHECK(r.k_hat == 1);
  CHECK(r.ratio_c == doctest::Approx(0.05));
  CHECK(r.lambda_bar == doctest::Approx(mp_upper_bound(0.05)));
  CHECK(r.selected_eigenvalues().size() == 1);
  CHECK(r.spectrum.eigenvalues.sum() == doctest::Approx(20.0));
  CHECK(r.clipped_spectrum.sum() == doctest::Approx(20.0));
  CHECK(r.whitener_scatter.trace() == doctest::Approx(20.0));
  CHECK(asymmetry(r.denoised) == 0.0);
  CHECK(eigen_symmetric(r.denoised).eigenvalues.minCoeff() > 0.0);

  // Diagonal matches the sample variances of the demeaned window.
  const Matrix x = robust::demean(panel.returns);
  const Vector var = x.rowwise().squaredNorm() / 400.0;
  CHECK((r.denoised.diagonal() - var).cwiseAbs().maxCoeff() < 1e-12 * var.maxCoeff());
  CHECK(r.normalization == robust::Normalization::covariance_scale);
}

TEST_CASE("clean_covariance: trace-m output when not matching variances") {
  market::FactorModelSpec spec;
  spec.m = 10;
  spec.n = 200;
  spec.k = 1;
  spec.seed = 6;
  CleaningConfig cfg;
  cfg.match_sample_variances = false;
  const CleaningReport r = clean_covariance(market::gen_panel(spec).returns, cfg);
  CHECK(r.denoised.trace() == doctest::Approx(10.0));
  CHECK(r.normalization == robust::Normalization::trace_m);
}

TEST_CASE("clean_covariance: too few samples") {
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(clean_covariance(oracle::gaussian(10, 10, rng)),
                  InsufficientSamplesError);
}

TEST_CASE("clean_covariance: detects three heavy-tailed factors where SCM over-counts") {
  market::FactorModelSpec spec;  // m=100, N=1000, K=3, rho=0.8, nu=0.5
  int pipeline_hits = 0;
  int scm_over = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    spec.seed = 500 + s;
    const auto panel = market::gen_panel(spec);
    CleaningConfig cfg;
    cfg.demean = false;
    const CleaningReport r = clean_covariance(panel.returns, cfg);
    if (r.k_hat == 3) ++pipeline_hits;
    Vector e = eigen_symmetric(robust::scm(panel.returns).values()).eigenvalues;
    e /= e.mean();
    if (select_order(e, r.lambda_bar) > 3) ++scm_over;
  }
  CHECK(pipeline_hits == 3);
  CHECK(scm_over == 3);
}

TEST_CASE("clean_covariance: k_hat is monotone in the power of an injected source") {
  market::FactorModelSpec spec;
  spec.m = 40;
  spec.n = 400;
  spec.k = 0;
  spec.factor_snr = 0.0;
  spec.seed = 99;
  const auto noise = market::gen_panel(spec);
  market::Rng rng(100);
  const Matrix u = market::gen_orthonormal_columns(40, 1, rng);
  const Matrix f = oracle::gaussian(1, 400, rng);

  CleaningConfig cfg;
  cfg.demean = false;
  Eigen::Index last = -1;
  for (double power : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0}) {
    const Matrix r = noise.returns + std::sqrt(power / 40.0) * u * f;
    const Eigen::Index k = clean_covariance(r, cfg).k_hat;
    CHECK(k >= last);
    last = k;
  }
  CHECK(last >= 1);
}
