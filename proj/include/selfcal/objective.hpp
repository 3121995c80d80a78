#pragma once

#include <functional>
#include <span>
#include <vector>

#include "selfcal/image.hpp"
#include "selfcal/objective_config.hpp"
#include "selfcal/problem.hpp"
#include "selfcal/synthesis.hpp"

namespace selfcal {

/// A scalar loss and its derivative w.r.t. every (pixel, channel) of the second image.
struct LossResult {
  double value = 0.0;
  std::vector<double> d_synth;
};

/// Mean of |a - b| over masked pixels and all channels. Throws EmptyMaskError.
LossResult l1_loss(const Image &a, const Image &b, const Mask &mask);

/**
 * Structural similarity over 3x3 edge-replicated windows, per pixel and channel.
 *
 * Besides the values it keeps the partial derivatives of each SSIM value w.r.t.
 * the window statistics of `b` (mean, mean of squares, mean of products with
 * `a`), which is all backward() needs.
 */
struct SsimMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> value;
  std::vector<double> d_mean_b;
  std::vector<double> d_mean_bb;
  std::vector<double> d_mean_ab;

  /// Returns sum_p upstream[p] * dSSIM[p] / db[q] for every (pixel, channel) q.
  std::vector<double> backward(std::span<const double> upstream, const Image &a, const Image &b) const;
};

/// Throws ShapeError for mismatched images or images smaller than 3x3.
SsimMap ssim_map(const Image &a, const Image &b, double c1, double c2);

/**
 * Per-pixel photometric error averaged over channels, before masking.
 *
 * Masked-out synth pixels are replaced by the target's values before the SSIM
 * windows are formed, so pixels on the mask border are compared only against
 * real reconstructions and masked-out values never reach the loss.
 */
struct PhotometricErrorMap {
  std::vector<double> error;
  SsimMap ssim;
  /// The synthesized image with masked-out pixels taken from the target.
  Image filled;
  Mask mask;

  /// d(sum_p weights[p] * error[p]) / d synth; zero at masked-out pixels.
  std::vector<double> backward(std::span<const double> weights, const Image &target,
                               const PhotometricConfig &cfg) const;
};

PhotometricErrorMap photometric_error_map(const Image &target, const Image &synth, const Mask &mask,
                                          const PhotometricConfig &cfg);

/// Mean over masked pixels of alpha/2 (1 - SSIM) + (1 - alpha) |target - synth|, channel-averaged.
LossResult photometric_loss(const Image &target, const Image &synth, const Mask &mask, const PhotometricConfig &cfg);

struct SmoothnessResult {
  double value = 0.0;
  std::vector<double> d_disparity;
};

/**
 * Edge-aware smoothness of mean-normalized disparity:
 * mean |dx d| exp(-|dx I|) + mean |dy d| exp(-|dy I|), forward differences,
 * each term averaged over its own difference count. |.| has subgradient 0 at 0.
 */
SmoothnessResult smoothness_loss(std::span<const double> disparity, const Image &guide);

struct ObjectiveValue {
  double value = 0.0;
  ParamGradient gradient;
};

/**
 * Full forward pass params -> K, poses, depths -> warp -> synth -> loss, summed
 * over snippets and active pyramid levels (level l weighted 2^-l).
 * Deterministic and independent of snippet order.
 */
double total_objective(const CalibProblem &problem, const ParamVector &params);

/// Analytic gradient of total_objective.
ParamGradient gradient(const CalibProblem &problem, const ParamVector &params);

/// Objective and gradient from one pass; `value` is bit-identical to total_objective.
ObjectiveValue evaluate(const CalibProblem &problem, const ParamVector &params);

/// Central differences of total_objective. Throws DomainError for eps <= 0.
ParamGradient finite_difference_gradient(const CalibProblem &problem, const ParamVector &params, double eps);

/// Central differences of an arbitrary scalar function.
std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)> &f,
                                               std::span<const double> x, double eps);

}  // namespace selfcal
