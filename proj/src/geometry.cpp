#include "selfcal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "selfcal/errors.hpp"

namespace selfcal {
namespace {

constexpr double kTaylorCutoff = 1e-8;

/// Coefficients of R = I + a W + b W^2 and V = I + b W + c W^2, with W = [omega]x,
/// plus (db/dtheta)/theta and (dc/dtheta)/theta for the translation Jacobian.
struct ExpCoefficients {
  double a, b, c, b1, c1;
};

ExpCoefficients coefficients(double theta) {
  const double t2 = theta * theta;
  ExpCoefficients k{};
  if (theta < kTaylorCutoff) {
    k.a = 1.0;
    k.b = 0.5;
    k.c = 1.0 / 6.0;
  } else {
    const double half_sin = std::sin(0.5 * theta);
    k.a = std::sin(theta) / theta;
    k.b = 2.0 * half_sin * half_sin / t2;
    if (theta < 0.1) {
      // theta - sin(theta) cancels badly here.
      k.c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362880.0 + t2 * t2 * t2 * t2 / 39916800.0;
    } else {
      k.c = (theta - std::sin(theta)) / (t2 * theta);
    }
  }
  if (theta < 0.5) {
    // Series for b1 = sum_{k>=1} (-1)^k 2k theta^(2k-2) / (2k+2)!, c1 likewise with (2k+3)!.
    double b1 = 0.0;
    double c1 = 0.0;
    double power = 1.0;
    double fact_b = 24.0;   // 4!
    double fact_c = 120.0;  // 5!
    for (int i = 1; i <= 10; ++i) {
      const double sign = (i % 2 == 1) ? -1.0 : 1.0;
      b1 += sign * 2.0 * i * power / fact_b;
      c1 += sign * 2.0 * i * power / fact_c;
      power *= t2;
      fact_b *= (2.0 * i + 3.0) * (2.0 * i + 4.0);
      fact_c *= (2.0 * i + 4.0) * (2.0 * i + 5.0);
    }
    k.b1 = b1;
    k.c1 = c1;
  } else {
    k.b1 = (k.a - 2.0 * k.b) / t2;
    k.c1 = (k.b - 3.0 * k.c) / t2;
  }
  return k;
}

}  // namespace

Twist Twist::from_array(std::span<const double> values) {
  if (values.size() != kSize) throw ShapeError("a twist has exactly 6 components");
  Twist xi;
  xi.omega = {values[0], values[1], values[2]};
  xi.vel = {values[3], values[4], values[5]};
  return xi;
}

std::array<double, Twist::kSize> Twist::to_array() const {
  return {omega.x(), omega.y(), omega.z(), vel.x(), vel.y(), vel.z()};
}

bool Pose::is_valid(double tol) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d skew(const Eigen::Vector3d &w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

TwistPose exp_se3(const Twist &xi) {
  if (!xi.omega.allFinite() || !xi.vel.allFinite()) throw DomainError("twist components must be finite");
  const double theta = xi.omega.norm();
  if (theta >= std::numbers::pi) throw DomainError("rotation magnitude outside the exponential chart (|omega| >= pi)");

  const ExpCoefficients k = coefficients(theta);
  const Eigen::Matrix3d W = skew(xi.omega);
  const Eigen::Matrix3d W2 = W * W;
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();

  TwistPose out;
  out.pose.R = I + k.a * W + k.b * W2;
  out.left_jacobian = I + k.b * W + k.c * W2;
  out.pose.t = out.left_jacobian * xi.vel;

  const Eigen::Vector3d &w = xi.omega;
  const Eigen::Vector3d &v = xi.vel;
  const Eigen::Vector3d wxv = w.cross(v);
  const Eigen::Vector3d wxwxv = w.cross(wxv);
  out.d_translation_d_omega = wxv * (k.b1 * w.transpose()) - k.b * skew(v) + wxwxv * (k.c1 * w.transpose()) +
                              k.c * (w.dot(v) * I + w * v.transpose() - 2.0 * v * w.transpose());
  return out;
}

Pose compose(const Pose &a, const Pose &b) { return {a.R * b.R, a.R * b.t + a.t}; }

Pose inverse(const Pose &p) {
  const Eigen::Matrix3d rt = p.R.transpose();
  return {rt, -(rt * p.t)};
}

Point3 transform_point(const Pose &p, const Point3 &point) { return p.R * point + p.t; }

TransformedPoint transform_point(const TwistPose &p, const Point3 &point) {
  TransformedPoint out;
  const Eigen::Vector3d rotated = p.pose.R * point;
  out.point = rotated + p.pose.t;
  out.d_point = p.pose.R;
  out.d_twist.leftCols<3>() = -skew(rotated) * p.left_jacobian + p.d_translation_d_omega;
  out.d_twist.rightCols<3>() = p.left_jacobian;
  return out;
}

double rotation_angle_between(const Eigen::Matrix3d &a, const Eigen::Matrix3d &b) {
  const Eigen::Matrix3d rel = a.transpose() * b;
  // atan2 form stays accurate for tiny angles where acos loses precision.
  const Eigen::Vector3d axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
}

}  // namespace selfcal
