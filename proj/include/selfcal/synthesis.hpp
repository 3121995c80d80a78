#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "selfcal/camera.hpp"
#include "selfcal/geometry.hpp"
#include "selfcal/image.hpp"

namespace selfcal {

using Mask = std::vector<std::uint8_t>;

/// Where one target pixel lands in the source frame, with its derivatives.
struct WarpPixel {
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
  /// w.r.t. the raw intrinsic parameters (log_fx_n, log_fy_n, cx_n, cy_n).
  Eigen::Matrix<double, 2, 4> d_intrinsics = Eigen::Matrix<double, 2, 4>::Zero();
  /// w.r.t. the twist [omega | vel] of the target-to-source pose.
  Eigen::Matrix<double, 2, 6> d_twist = Eigen::Matrix<double, 2, 6>::Zero();
  /// w.r.t. the target pixel's depth.
  Eigen::Vector2d d_depth = Eigen::Vector2d::Zero();
};

struct WarpField {
  int width = 0;
  int height = 0;
  std::vector<WarpPixel> pixels;

  const WarpPixel &at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/**
 * Inverse warp of the target grid into the source frame.
 *
 * `pose_t_to_s` maps target-frame points into the source frame; both frames
 * share `intrinsics`. A pixel is invalid when its transformed point has
 * z <= 0 or its source coordinates fall outside [0, W-1] x [0, H-1].
 */
WarpField warp_coordinates(const DepthMap &depth, const RealizedIntrinsics &intrinsics, const TwistPose &pose_t_to_s);

struct SynthesizedView {
  Image image;
  Mask mask;
  /// Sampling derivatives, same layout as `image`; zero where masked.
  std::vector<double> d_du;
  std::vector<double> d_dv;
};

/// Pulls source pixels into the target grid. Throws ShapeError on dimension mismatch.
SynthesizedView synthesize_view(const Image &source, const WarpField &field);

}  // namespace selfcal
