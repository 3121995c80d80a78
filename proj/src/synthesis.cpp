#include "selfcal/synthesis.hpp"

#include "selfcal/errors.hpp"

namespace selfcal {

WarpField warp_coordinates(const DepthMap &depth, const RealizedIntrinsics &intrinsics, const TwistPose &pose_t_to_s) {
  const IntrinsicMatrix &K = intrinsics.K;
  const int w = depth.width();
  const int h = depth.height();
  WarpField field;
  field.width = w;
  field.height = h;
  field.pixels.resize(static_cast<std::size_t>(w) * h);

  const double inv_fx = 1.0 / K.fx;
  const double inv_fy = 1.0 / K.fy;
  // Unproject-then-project is only exact up to rounding; the identity pose maps
  // every pixel onto itself, which keeps border pixels valid and samples exact.
  const bool identity = pose_t_to_s.pose.R == Eigen::Matrix3d::Identity() && pose_t_to_s.pose.t.isZero(0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      WarpPixel &out = field.pixels[static_cast<std::size_t>(y) * w + x];
      const double d = depth.at(x, y);
      const double xn = (x - K.cx) * inv_fx;
      const double yn = (y - K.cy) * inv_fy;
      const Point3 point(xn * d, yn * d, d);

      const TransformedPoint moved = transform_point(pose_t_to_s, point);
      const auto proj = project(moved.point, K);
      if (!proj) continue;
      out.u = identity ? x : proj->uv.x();
      out.v = identity ? y : proj->uv.y();
      out.valid = out.u >= 0.0 && out.v >= 0.0 && out.u <= w - 1 && out.v <= h - 1;
      if (!out.valid) continue;

      const Eigen::Matrix<double, 2, 3> d_uv_d_src = proj->d_point * moved.d_point;

      // d point / d (fx, fy, cx, cy) through the unprojection.
      Eigen::Matrix<double, 3, 4> d_point_d_k = Eigen::Matrix<double, 3, 4>::Zero();
      d_point_d_k(0, 0) = -xn * d * inv_fx;
      d_point_d_k(0, 2) = -d * inv_fx;
      d_point_d_k(1, 1) = -yn * d * inv_fy;
      d_point_d_k(1, 3) = -d * inv_fy;

      out.d_intrinsics = (proj->d_intrinsics + d_uv_d_src * d_point_d_k) * intrinsics.jacobian;
      out.d_twist = proj->d_point * moved.d_twist;
      out.d_depth = d_uv_d_src * Eigen::Vector3d(xn, yn, 1.0);
    }
  }
  return field;
}

SynthesizedView synthesize_view(const Image &source, const WarpField &field) {
  if (source.width() != field.width || source.height() != field.height) {
    throw ShapeError("source image and warp field dimensions differ");
  }
  const int nc = source.channels();
  SynthesizedView out;
  out.image = Image(field.width, field.height, nc);
  out.mask.assign(field.pixels.size(), 0);
  out.d_du.assign(out.image.data().size(), 0.0);
  out.d_dv.assign(out.image.data().size(), 0.0);
  auto pixels = out.image.data();
  for (std::size_t i = 0; i < field.pixels.size(); ++i) {
    const WarpPixel &wp = field.pixels[i];
    if (!wp.valid) continue;
    const PixelSample s = sample_bilinear(source, wp.u, wp.v);
    if (!s.valid) continue;
    out.mask[i] = 1;
    for (int c = 0; c < nc; ++c) {
      pixels[i * nc + c] = s.color[c];
      out.d_du[i * nc + c] = s.d_du[c];
      out.d_dv[i * nc + c] = s.d_dv[c];
    }
  }
  return out;
}

}  // namespace selfcal
