#include "rmtfolio/rmt_denoise.hpp"

#include <cmath>
#include <string>

#include "rmtfolio/errors.hpp"

namespace rmtfolio::rmt {

double mp_upper_bound(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ParameterError("mp_upper_bound: ratio c must be > 0");
  }
  const double edge = 1.0 + std::sqrt(c);
  return edge * edge;
}

Eigen::Index select_order(const Vector& descending_eigenvalues, double lambda_bar) {
  return (descending_eigenvalues.array() > lambda_bar).count();
}

Eigen::Index select_order(const EigenSpectrum& spectrum, double lambda_bar) {
  return select_order(spectrum.eigenvalues, lambda_bar);
}

Vector clip_spectrum(const Vector& lambda, Eigen::Index k, ClipRule rule) {
  const Eigen::Index m = lambda.size();
  if (k < 0 || k > m) {
    throw ParameterError("clip_spectrum: k must lie in [0, m]");
  }
  for (Eigen::Index i = 1; i < m; ++i) {
    if (lambda[i] > lambda[i - 1]) {
      throw ParameterError("clip_spectrum: eigenvalues must be in descending order");
    }
  }
  if (k == m) return lambda;
  const double noise_slots = static_cast<double>(m - k);
  double fill = 0.0;
  if (rule == ClipRule::trace_preserving) {
    fill = (lambda.sum() - lambda.head(k).sum()) / noise_slots;
  } else {
    fill = (lambda.sum() - lambda.tail(m - k).sum()) / noise_slots;
  }
  if (!(fill > 0.0)) {
    throw DegenerateError("clip_spectrum: replacement value " +
                          std::to_string(fill) + " is not positive");
  }
  Vector out = lambda;
  out.tail(m - k).setConstant(fill);
  return out;
}

Vector clip_spectrum(const EigenSpectrum& spectrum, Eigen::Index k, ClipRule rule) {
  return clip_spectrum(spectrum.eigenvalues, k, rule);
}

CleaningReport clean_covariance(const Matrix& panel, const CleaningConfig& cfg) {
  cfg.tyler.validate();
  const Eigen::Index m = panel.rows();
  const Eigen::Index n = panel.cols();
  const double md = static_cast<double>(m);

  const Matrix x = cfg.demean ? robust::demean(panel) : panel;

  CleaningReport report;
  robust::TylerEstimate raw = robust::tyler_detailed(x, cfg.tyler);
  report.tyler_iterations = raw.iterations;

  report.whitener_scatter =
      robust::rescale_trace(robust::toeplitzify(raw.scatter.values()), md);
  robust::InverseRoot transform =
      robust::inv_sqrt(report.whitener_scatter, cfg.tyler.eigen_floor);
  for (auto& w : transform.warnings) report.warnings.push_back(std::move(w));

  const Matrix whitened = robust::whiten(x, transform.inverse_root);
  robust::TylerEstimate white = robust::tyler_detailed(whitened, cfg.tyler);
  report.whitened_tyler_iterations = white.iterations;

  report.spectrum = eigen_symmetric(white.scatter.values());
  report.ratio_c = md / static_cast<double>(n);
  report.lambda_bar = mp_upper_bound(report.ratio_c);
  report.k_hat = select_order(report.spectrum, report.lambda_bar);
  report.clipped_spectrum =
      clip_spectrum(report.spectrum, report.k_hat, cfg.clip_rule);

  const Matrix clipped_white =
      reconstruct(report.spectrum.eigenvectors, report.clipped_spectrum);
  Matrix denoised = symmetrized(transform.root * clipped_white * transform.root);

  if (cfg.match_sample_variances) {
    const Vector sample_var = x.rowwise().squaredNorm() / static_cast<double>(n);
    const Vector diag = denoised.diagonal();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(sample_var[i] > 0.0)) {
        throw DegenerateError("clean_covariance: asset " + std::to_string(i) +
                              " has zero sample variance");
      }
      if (!(diag[i] > 0.0)) {
        throw DegenerateError("clean_covariance: de-noised diagonal not positive");
      }
    }
    const Vector scale = (sample_var.array() / diag.array()).sqrt().matrix();
    denoised = scale.asDiagonal() * denoised * scale.asDiagonal();
    denoised = symmetrized(denoised);
    report.normalization = robust::Normalization::covariance_scale;
  } else {
    report.normalization = robust::Normalization::trace_m;
    denoised = robust::rescale_trace(denoised, md);
  }
  report.denoised = std::move(denoised);
  return report;
}

}  // namespace rmtfolio::rmt
