#pragma once

namespace selfcal {

/// Photometric loss composition: alpha/2 (1 - SSIM) + (1 - alpha) |target - synth|.
struct PhotometricConfig {
  double alpha = 0.85;
  double ssim_c1 = 0.01 * 0.01;
  double ssim_c2 = 0.03 * 0.03;
  double smoothness_weight = 1e-3;
  /// Per-pixel minimum over context frames instead of the mean.
  bool use_min_reprojection = false;

  /// Throws DomainError unless 0 <= alpha <= 1, constants > 0 and weight >= 0.
  void validate() const;
};

}  // namespace selfcal
