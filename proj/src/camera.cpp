#include "selfcal/camera.hpp"

#include <cmath>
#include <stdexcept>

#include "selfcal/errors.hpp"

namespace selfcal {

std::string to_string(CameraModel model) {
  switch (model) {
    case CameraModel::kPinhole:
      return "pinhole";
  }
  return "unknown";
}

CameraModel camera_model_from_string(const std::string &name) {
  if (name == "pinhole") return CameraModel::kPinhole;
  throw FormatError("unsupported camera model '" + name + "'");
}

IntrinsicParams IntrinsicParams::defaults() {
  IntrinsicParams p;
  p.log_fx_n = std::log(0.8);
  p.log_fy_n = std::log(0.8);
  p.cx_n = 0.5;
  p.cy_n = 0.5;
  return p;
}

IntrinsicParams IntrinsicParams::from_pixels(double fx, double fy, double cx, double cy, double width, double height) {
  if (!(fx > 0.0 && fy > 0.0)) throw DomainError("focal lengths must be positive");
  IntrinsicParams p;
  p.log_fx_n = std::log(fx / width);
  p.log_fy_n = std::log(fy / height);
  p.cx_n = cx / width;
  p.cy_n = cy / height;
  return p;
}

IntrinsicParams IntrinsicParams::from_array(std::span<const double> values) {
  if (values.size() != kSize) throw ShapeError("pinhole intrinsics need exactly 4 values");
  IntrinsicParams p;
  p.log_fx_n = values[0];
  p.log_fy_n = values[1];
  p.cx_n = values[2];
  p.cy_n = values[3];
  return p;
}

Eigen::Matrix3d IntrinsicMatrix::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

RealizedIntrinsics realize_intrinsics(const IntrinsicParams &params, double width, double height) {
  RealizedIntrinsics r;
  r.K.fx = std::exp(params.log_fx_n) * width;
  r.K.fy = std::exp(params.log_fy_n) * height;
  r.K.cx = params.cx_n * width;
  r.K.cy = params.cy_n * height;
  r.jacobian.setZero();
  r.jacobian(0, 0) = r.K.fx;
  r.jacobian(1, 1) = r.K.fy;
  r.jacobian(2, 2) = width;
  r.jacobian(3, 3) = height;
  return r;
}

RealizedIntrinsics level_intrinsics(const IntrinsicParams &params, int full_width, int full_height, int level) {
  const double scale = std::ldexp(1.0, -level);
  RealizedIntrinsics r = realize_intrinsics(params, full_width * scale, full_height * scale);
  const double shift = 0.5 * (1.0 - scale);
  r.K.cx -= shift;
  r.K.cy -= shift;
  return r;
}

std::optional<Projection> project(const Point3 &point, const IntrinsicMatrix &K) {
  const double z = point.z();
  if (!(z > 0.0)) return std::nullopt;
  const double inv_z = 1.0 / z;
  const double xn = point.x() * inv_z;
  const double yn = point.y() * inv_z;
  Projection p;
  p.uv = {K.fx * xn + K.cx, K.fy * yn + K.cy};
  p.d_point << K.fx * inv_z, 0.0, -K.fx * xn * inv_z, 0.0, K.fy * inv_z, -K.fy * yn * inv_z;
  p.d_intrinsics << xn, 0.0, 1.0, 0.0, 0.0, yn, 0.0, 1.0;
  return p;
}

Point3 unproject(double u, double v, double depth, const IntrinsicMatrix &K) {
  if (!(depth > 0.0)) throw DomainError("unproject needs depth > 0");
  if (!(K.fx > 0.0 && K.fy > 0.0)) throw DomainError("unproject needs positive focal lengths");
  return {(u - K.cx) * depth / K.fx, (v - K.cy) * depth / K.fy, depth};
}

}  // namespace selfcal
