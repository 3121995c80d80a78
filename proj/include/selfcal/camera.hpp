#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

namespace selfcal {

using Point3 = Eigen::Vector3d;

/// Camera model tag. Only the pinhole model is implemented; other models
/// (fisheye) would add their own parameter count here.
enum class CameraModel { kPinhole };

std::string to_string(CameraModel model);
CameraModel camera_model_from_string(const std::string &name);

/**
 * The trainable intrinsic parameter vector.
 *
 * Focals are stored as log(f / dimension) and the principal point as a
 * fraction of the dimension, so one parameter set describes the camera at
 * every pyramid level and the focals stay positive without constraints.
 */
struct IntrinsicParams {
  static constexpr int kSize = 4;

  double log_fx_n = 0.0;
  double log_fy_n = 0.0;
  double cx_n = 0.5;
  double cy_n = 0.5;
  CameraModel model = CameraModel::kPinhole;

  /// log f/W = log f/H = ln 0.8, centered principal point.
  static IntrinsicParams defaults();
  /// Inverse of realize_intrinsics at the given resolution.
  static IntrinsicParams from_pixels(double fx, double fy, double cx, double cy, double width, double height);

  std::array<double, kSize> to_array() const { return {log_fx_n, log_fy_n, cx_n, cy_n}; }
  static IntrinsicParams from_array(std::span<const double> values);
};

/// Zero-skew upper-triangular pinhole matrix in pixels.
struct IntrinsicMatrix {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Eigen::Matrix3d matrix() const;
};

struct RealizedIntrinsics {
  IntrinsicMatrix K;
  /// d(fx, fy, cx, cy) / d(log_fx_n, log_fy_n, cx_n, cy_n); diagonal for the pinhole model.
  Eigen::Matrix4d jacobian;
};

/// fx = exp(log_fx_n) W, fy = exp(log_fy_n) H, cx = cx_n W, cy = cy_n H.
RealizedIntrinsics realize_intrinsics(const IntrinsicParams &params, double width, double height);

/**
 * Intrinsics for pyramid level `level` of a full_width x full_height image.
 *
 * The matrix is realized at (W / 2^l, H / 2^l) and then the principal point is
 * moved by -(1 - 2^-l) / 2 so that level pixel centers line up with the
 * 2x2-block means of the pyramid: level coordinate = (full + 0.5) / 2^l - 0.5.
 */
RealizedIntrinsics level_intrinsics(const IntrinsicParams &params, int full_width, int full_height, int level);

struct Projection {
  Eigen::Vector2d uv;
  Eigen::Matrix<double, 2, 3> d_point;
  /// Derivatives w.r.t. (fx, fy, cx, cy).
  Eigen::Matrix<double, 2, 4> d_intrinsics;
};

/// Perspective projection; std::nullopt when the point is not in front of the camera.
std::optional<Projection> project(const Point3 &point, const IntrinsicMatrix &K);

/// Back-projects pixel (u, v) at the given z-depth. Throws DomainError for depth <= 0.
Point3 unproject(double u, double v, double depth, const IntrinsicMatrix &K);

}  // namespace selfcal
