#pragma once

#include <array>
#include <span>

#include <Eigen/Core>

#include "selfcal/camera.hpp"

namespace selfcal {

/// Tangent-space rigid motion: axis-angle rotation `omega` and translation part `vel`.
/// Packed as [omega | vel] wherever a flat 6-vector is used.
struct Twist {
  static constexpr int kSize = 6;

  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel = Eigen::Vector3d::Zero();

  static Twist from_array(std::span<const double> values);
  std::array<double, kSize> to_array() const;
};

/// Rigid transformation x' = R x + t.
struct Pose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  /// Orthonormality and unit determinant within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// A pose produced by exp_se3, carrying what transform_point needs for the twist Jacobian.
struct TwistPose {
  Pose pose;
  /// SO(3) left Jacobian V(omega); also the map vel -> t.
  Eigen::Matrix3d left_jacobian = Eigen::Matrix3d::Identity();
  /// d(V(omega) vel) / d omega.
  Eigen::Matrix3d d_translation_d_omega = Eigen::Matrix3d::Zero();
};

/// Exponential map. Throws DomainError when |omega| >= pi.
TwistPose exp_se3(const Twist &xi);

Pose compose(const Pose &a, const Pose &b);
Pose inverse(const Pose &p);

Point3 transform_point(const Pose &p, const Point3 &point);

struct TransformedPoint {
  Point3 point;
  /// d point' / d point (= R).
  Eigen::Matrix3d d_point;
  /// d point' / d [omega | vel].
  Eigen::Matrix<double, 3, 6> d_twist;
};

TransformedPoint transform_point(const TwistPose &p, const Point3 &point);

Eigen::Matrix3d skew(const Eigen::Vector3d &w);

/// Geodesic angle of R_a^T R_b in radians.
double rotation_angle_between(const Eigen::Matrix3d &a, const Eigen::Matrix3d &b);

}  // namespace selfcal
