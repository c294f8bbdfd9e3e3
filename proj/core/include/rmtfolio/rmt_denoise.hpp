#pragma once

#include <string>
#include <vector>

#include "rmtfolio/linalg.hpp"
#include "rmtfolio/robust_estimation.hpp"

namespace rmtfolio::rmt {

/// Upper edge (1 + sqrt(c))^2 of the Marchenko-Pastur law. Requires c > 0.
double mp_upper_bound(double c);

/// Number of eigenvalues strictly above lambda_bar.
Eigen::Index select_order(const EigenSpectrum& spectrum, double lambda_bar);
Eigen::Index select_order(const Vector& descending_eigenvalues, double lambda_bar);

enum class ClipRule {
  /// Noise eigenvalues replaced by (trace - sum of the top k) / (m - k).
  trace_preserving,
  /// (trace - sum of the bottom m - k) / (m - k), i.e. sum of the top k
  /// spread over m - k slots. Inflates the trace; kept for comparison.
  literal,
};

/// Replaces the m - k smallest eigenvalues of a descending spectrum by a
/// common value; the top k are untouched. k == m returns the input.
Vector clip_spectrum(const Vector& descending_eigenvalues, Eigen::Index k,
                     ClipRule rule = ClipRule::trace_preserving);
Vector clip_spectrum(const EigenSpectrum& spectrum, Eigen::Index k,
                     ClipRule rule = ClipRule::trace_preserving);

struct CleaningConfig {
  robust::TylerConfig tyler;
  bool demean = true;
  ClipRule clip_rule = ClipRule::trace_preserving;
  /// Scale the result so its diagonal equals the window's sample variances.
  /// When false the result stays at the whitened-scatter scale.
  bool match_sample_variances = true;
};

struct CleaningReport {
  Eigen::Index k_hat = 0;
  double lambda_bar = 0.0;
  double ratio_c = 0.0;
  EigenSpectrum spectrum;      ///< of the trace-m whitened Tyler estimate
  Vector clipped_spectrum;
  Matrix whitener_scatter;     ///< rescaled Toeplitz estimate, trace m
  Matrix denoised;             ///< de-noised covariance handed to allocators
  robust::Normalization normalization = robust::Normalization::covariance_scale;
  int tyler_iterations = 0;
  int whitened_tyler_iterations = 0;
  std::vector<std::string> warnings;

  /// Eigenvalues above the threshold (the selected source eigenvalues).
  Vector selected_eigenvalues() const { return spectrum.eigenvalues.head(k_hat); }
};

/// Tyler -> Toeplitz rectification -> whitening -> Tyler on the whitened
/// panel -> Marchenko-Pastur order selection -> clipping -> reconstruction
/// and un-whitening. `panel` is m x N with N > m.
CleaningReport clean_covariance(const Matrix& panel, const CleaningConfig& cfg = {});

}  // namespace rmtfolio::rmt
