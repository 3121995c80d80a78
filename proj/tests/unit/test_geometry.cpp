#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "property.hpp"
#include "selfcal/errors.hpp"
#include "selfcal/geometry.hpp"

using namespace selfcal;

namespace {

double max_abs(const Eigen::MatrixXd &m) { return m.cwiseAbs().maxCoeff(); }

Pose random_pose(proptest::Gen &g) { return exp_se3(g.twist(3.0, 5.0)).pose; }

}  // namespace

TEST(Geometry, ZeroTwistIsIdentity) {
  const Pose p = exp_se3(Twist{}).pose;
  EXPECT_EQ(p.R, Eigen::Matrix3d::Identity());
  EXPECT_EQ(p.t, Eigen::Vector3d::Zero());
}

TEST(Geometry, QuarterTurnAboutZ) {
  Twist xi;
  xi.omega = {0, 0, std::numbers::pi / 2};
  const Pose p = exp_se3(xi).pose;
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LE(max_abs(p.R - expected), 1e-15);
  EXPECT_EQ(p.t, Eigen::Vector3d::Zero());
  EXPECT_LE((transform_point(p, Point3(1, 0, 0)) - Point3(0, 1, 0)).norm(), 1e-15);
}

TEST(Geometry, PureTranslationTwist) {
  Twist xi;
  xi.vel = {1, 2, 3};
  const Pose p = exp_se3(xi).pose;
  EXPECT_EQ(p.R, Eigen::Matrix3d::Identity());
  EXPECT_EQ(p.t, Eigen::Vector3d(1, 2, 3));
}

TEST(Geometry, RejectsRotationOutsideChart) {
  Twist xi;
  xi.omega = {0, std::numbers::pi, 0};
  EXPECT_THROW(exp_se3(xi), DomainError);
  xi.omega = {0, 0, std::nan("")};
  EXPECT_THROW(exp_se3(xi), DomainError);
}

TEST(Geometry, TwistArrayOrder) {
  const Twist xi = Twist::from_array(std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(xi.omega, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(xi.vel, Eigen::Vector3d(4, 5, 6));
  EXPECT_EQ(xi.to_array(), (std::array<double, 6>{1, 2, 3, 4, 5, 6}));
  EXPECT_THROW(Twist::from_array(std::vector<double>{1, 2}), ShapeError);
}

TEST(Geometry, ComposeExamples) {
  proptest::Gen g(5);
  const Pose p = random_pose(g);
  const Pose a = compose(Pose::identity(), p);
  EXPECT_EQ(a.R, p.R);
  EXPECT_EQ(a.t, p.t);
  const Pose id = compose(p, inverse(p));
  EXPECT_LE(max_abs(id.R - Eigen::Matrix3d::Identity()), 1e-12);
  EXPECT_LE(id.t.norm(), 1e-12);
  Pose t1, t2;
  t1.t = {0, 0, 1};
  t2.t = {0, 0, 2};
  EXPECT_EQ(compose(t1, t2).t, Eigen::Vector3d(0, 0, 3));
}

TEST(Geometry, InverseExamples) {
  const Pose i = inverse(Pose::identity());
  EXPECT_EQ(i.R, Eigen::Matrix3d::Identity());
  EXPECT_EQ(i.t, Eigen::Vector3d::Zero());
  Pose t;
  t.t = {1, -2, 3};
  EXPECT_EQ(inverse(t).t, Eigen::Vector3d(-1, 2, -3));
  proptest::Gen g(6);
  const Pose p = random_pose(g);
  const Pose back = inverse(inverse(p));
  EXPECT_LE(max_abs(back.R - p.R), 1e-12);
  EXPECT_LE((back.t - p.t).norm(), 1e-12);
}

TEST(Geometry, IdentityLeavesPointUnchanged) {
  EXPECT_EQ(transform_point(Pose::identity(), Point3(1.5, -2, 7)), Point3(1.5, -2, 7));
}

TEST(Geometry, PoseValidity) {
  EXPECT_TRUE(Pose::identity().is_valid());
  Pose bad;
  bad.R(0, 0) = -1.0;  // reflection
  EXPECT_FALSE(bad.is_valid());
  bad.R = 1.1 * Eigen::Matrix3d::Identity();
  EXPECT_FALSE(bad.is_valid());
}

TEST(Geometry, RotationAngleBetween) {
  Twist xi;
  xi.omega = {0.3, 0, 0};
  EXPECT_NEAR(rotation_angle_between(Eigen::Matrix3d::Identity(), exp_se3(xi).pose.R), 0.3, 1e-12);
  EXPECT_EQ(rotation_angle_between(Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity()), 0.0);
}

TEST(GeometryProperty, ExpOfNegatedTwistIsInverse) {
  proptest::for_all("exp(-xi)", [](proptest::Gen &g) {
    Twist xi = g.twist(2.999, 3.0);
    Twist neg{-xi.omega, -xi.vel};
    const Pose a = exp_se3(neg).pose;
    const Pose b = inverse(exp_se3(xi).pose);
    EXPECT_LE(max_abs(a.R - b.R), 1e-10);
    EXPECT_LE((a.t - b.t).cwiseAbs().maxCoeff(), 1e-10);
  });
}

TEST(GeometryProperty, ExpProducesValidPoses) {
  proptest::for_all("valid pose", [](proptest::Gen &g) {
    const Pose p = exp_se3(g.twist(g.coin() ? 3.1 : 1e-7, 10.0)).pose;
    EXPECT_TRUE(p.is_valid(1e-9));
    EXPECT_LE(max_abs(p.R.transpose() * p.R - Eigen::Matrix3d::Identity()), 1e-9);
    EXPECT_NEAR(p.R.determinant(), 1.0, 1e-9);
  });
}

TEST(GeometryProperty, SmallAngleBranchIsConsistent) {
  // Compare the two branches on either side of the Taylor cutoff and against
  // the general formula evaluated by hand at |omega| = 1e-6.
  proptest::for_all("branch", [](proptest::Gen &g) {
    Twist xi;
    xi.omega = g.vec3_with_norm(1e-6, 1e-6);
    xi.vel = g.vec3(-2, 2);
    const TwistPose tp = exp_se3(xi);
    const double th = xi.omega.norm();
    const Eigen::Matrix3d W = skew(xi.omega);
    // Cancellation-free forms of (1 - cos)/th^2 and (th - sin)/th^3.
    const double half = std::sin(th / 2) / th;
    const double b = 2 * half * half;
    const double c = 1.0 / 6 - th * th / 120 + th * th * th * th / 5040;
    const Eigen::Matrix3d R = Eigen::Matrix3d::Identity() + std::sin(th) / th * W + b * W * W;
    const Eigen::Matrix3d V = Eigen::Matrix3d::Identity() + b * W + c * W * W;
    EXPECT_LE(max_abs(tp.pose.R - R), 1e-10);
    EXPECT_LE((tp.pose.t - V * xi.vel).cwiseAbs().maxCoeff(), 1e-10);

    // Either side of the Taylor cutoff, against the second-order series at the same omega.
    for (double norm : {0.99e-8, 1.01e-8}) {
      Twist near = xi;
      near.omega = xi.omega.normalized() * norm;
      const Eigen::Matrix3d Wn = skew(near.omega);
      const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
      const TwistPose e = exp_se3(near);
      EXPECT_LE(max_abs(e.pose.R - (I + Wn + 0.5 * Wn * Wn)), 1e-15);
      EXPECT_LE((e.pose.t - (I + 0.5 * Wn + Wn * Wn / 6.0) * near.vel).cwiseAbs().maxCoeff(), 1e-15);
    }
  });
}

TEST(GeometryProperty, TransformPreservesDistances) {
  proptest::for_all("isometry", [](proptest::Gen &g) {
    const Pose p = random_pose(g);
    const Point3 a = g.vec3(-10, 10);
    const Point3 b = g.vec3(-10, 10);
    const double before = (a - b).norm();
    const double after = (transform_point(p, a) - transform_point(p, b)).norm();
    EXPECT_NEAR(after, before, 1e-12 * std::max(1.0, before));
  });
}

TEST(GeometryProperty, TwistJacobianMatchesFiniteDifferences) {
  proptest::for_all("twist jacobian", [](proptest::Gen &g) {
    const Twist xi = g.coin() ? g.twist(2.5, 3.0) : g.twist(1e-9, 3.0);
    const Point3 P = g.vec3(-3, 3);
    const TransformedPoint tp = transform_point(exp_se3(xi), P);
    EXPECT_EQ(tp.d_point, exp_se3(xi).pose.R);
    const double step = 1e-6;
    for (int j = 0; j < 6; ++j) {
      auto a = xi.to_array();
      auto b = xi.to_array();
      a[j] += step;
      b[j] -= step;
      const Eigen::Vector3d fd = (transform_point(exp_se3(Twist::from_array(a)).pose, P) -
                                  transform_point(exp_se3(Twist::from_array(b)).pose, P)) /
                                 (2 * step);
      for (int i = 0; i < 3; ++i) EXPECT_LE(proptest::rel_err_floor(tp.d_twist(i, j), fd(i), 1.0), 1e-6);
    }
  });
}
