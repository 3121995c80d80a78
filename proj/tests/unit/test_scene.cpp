#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "property.hpp"
#include "selfcal/errors.hpp"
#include "selfcal/objective.hpp"
#include "selfcal/scene.hpp"
#include "selfcal/synthesis.hpp"

using namespace selfcal;

namespace {

/// Depth along the pixel ray to the nearest plane in front of the camera.
double ray_cast_depth(const SceneSpec &spec, const IntrinsicMatrix &K, const Pose &world_to_cam, double x, double y) {
  const Eigen::Matrix3d Rt = world_to_cam.R.transpose();
  const Eigen::Vector3d center = -Rt * world_to_cam.t;
  const Eigen::Vector3d dir_cam((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
  const Eigen::Vector3d dir = Rt * dir_cam;
  double best = std::numeric_limits<double>::infinity();
  for (const ScenePlane &p : spec.planes) {
    const double denom = p.normal.dot(dir);
    if (denom == 0.0) continue;
    const double s = (p.distance - p.normal.dot(center)) / denom;
    if (s > 0.0) best = std::min(best, s);
  }
  // dir_cam has unit z, so the ray parameter is the camera-frame depth.
  return best;
}

}  // namespace

TEST(Scene, TextureIsDeterministicAndInRange) {
  const ProceduralTexture a(7, 2.0);
  const ProceduralTexture b(7, 2.0);
  const ProceduralTexture other(8, 2.0);
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const double u = 0.37 * i - 3, v = 0.41 * j - 2;
      EXPECT_EQ(a(u, v), b(u, v));
      EXPECT_EQ(a(u, v), procedural_texture(7, u, v, 2.0));
      for (int c = 0; c < kMaxChannels; ++c) {
        EXPECT_GE(a(u, v)[c], 0.0);
        EXPECT_LE(a(u, v)[c], 1.0);
      }
      differs = differs || a(u, v) != other(u, v);
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Scene, FrontoPlaneDepth) {
  const SceneSpec spec = fronto_parallel_scene(32, 24, 5.0, 1);
  const IntrinsicMatrix K = realize_intrinsics(default_synthetic_intrinsics(), 32, 24).K;
  const RenderedView a = render_view(spec, K, Pose::identity());
  for (double d : a.depth.data()) EXPECT_NEAR(d, 5.0, 1e-12);
  Pose forward;
  forward.t = {0, 0, -1.5};  // camera moved 1.5 toward the plane
  const RenderedView b = render_view(spec, K, forward);
  for (double d : b.depth.data()) EXPECT_NEAR(d, 3.5, 1e-12);
}

TEST(Scene, MissingRaysAreCoverageErrors) {
  SceneSpec spec = fronto_parallel_scene(8, 6, 5.0, 1);
  spec.background.reset();
  const IntrinsicMatrix K = realize_intrinsics(default_synthetic_intrinsics(), 8, 6).K;
  Pose away;
  away.R = Eigen::Vector3d(-1, 1, -1).asDiagonal();
  EXPECT_THROW(render_view(spec, K, away), CoverageError);
  spec.background = 0.3;
  const RenderedView v = render_view(spec, K, away);
  for (double x : v.image.data()) EXPECT_EQ(x, 0.3);
  for (double d : v.depth.data()) EXPECT_EQ(d, spec.background_depth);
}

TEST(Scene, StaticSequenceHasIdenticalFrames) {
  const Sequence s = generate_sequence(three_plane_scene(40, 30, 2), default_synthetic_intrinsics(),
                                       std::vector<Twist>(2), 3);
  ASSERT_EQ(s.frames.size(), 3u);
  EXPECT_EQ(s.frames[0], s.frames[1]);
  EXPECT_EQ(s.frames[1], s.frames[2]);
  EXPECT_EQ(s.truth.poses.size(), 3u);
  EXPECT_EQ(s.truth.width, 40);
}

TEST(Scene, ForwardMotionShrinksFrontoDepth) {
  Twist step;
  step.vel = {0, 0, -0.4};
  const Sequence s = generate_sequence(fronto_parallel_scene(24, 18, 6.0, 3), default_synthetic_intrinsics(),
                                       std::vector<Twist>(3, step), 4);
  for (int k = 0; k < 4; ++k) {
    for (double d : s.truth.depths[k].data()) EXPECT_NEAR(d, 6.0 - 0.4 * k, 1e-12);
  }
}

TEST(Scene, SequenceErrors) {
  const SceneSpec spec = three_plane_scene(16, 12, 1);
  EXPECT_THROW(generate_sequence(spec, default_synthetic_intrinsics(), std::vector<Twist>(1), 2), ProblemError);
  EXPECT_THROW(generate_sequence(spec, default_synthetic_intrinsics(), std::vector<Twist>(3), 3), ProblemError);
  EXPECT_THROW(scene_preset("teapot", 16, 12, 1, 1), DomainError);
}

TEST(Scene, MixedTrajectoryPosesAreValid) {
  const Sequence s =
      generate_sequence(three_plane_scene(32, 24, 4), default_synthetic_intrinsics(), default_trajectory(5, 4), 5);
  EXPECT_TRUE(s.truth.poses[0].R == Eigen::Matrix3d::Identity());
  for (const Pose &p : s.truth.poses) EXPECT_TRUE(p.is_valid());
  const Pose rel = relative_pose(s.truth, 1, 2);
  const Pose expected = exp_se3(default_trajectory(5, 4)[1]).pose;
  EXPECT_LE((rel.R - expected.R).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((rel.t - expected.t).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Scene, RenderedDepthMatchesIndependentRayCast) {
  const int w = 80, h = 60;
  const SceneSpec spec = three_plane_scene(w, h, 5);
  const Sequence s = generate_sequence(spec, default_synthetic_intrinsics(), default_trajectory(3, 5), 3);
  const IntrinsicMatrix K = realize_intrinsics(s.truth.intrinsics, w, h).K;
  proptest::Gen g(5);
  for (int i = 0; i < 100; ++i) {
    const int frame = g.integer(0, 2);
    const int x = g.integer(0, w - 1), y = g.integer(0, h - 1);
    const double expected = ray_cast_depth(spec, K, s.truth.poses[frame], x, y);
    EXPECT_LE(std::abs(s.truth.depths[frame].at(x, y) - expected), 1e-12 * expected) << x << "," << y;
  }
}

TEST(Scene, RenderWarpConsistency) {
  const fixtures::SyntheticCase c = fixtures::synthetic_case(6, 160, 120, 5, 1);
  const GroundTruth &gt = c.seq.truth;
  const RealizedIntrinsics K = realize_intrinsics(gt.intrinsics, 160, 120);
  for (int t = 0; t + 1 < 5; ++t) {
    for (auto [target, source] : {std::pair{t, t + 1}, std::pair{t + 1, t}}) {
      const Twist xi = fixtures::pair_twist(c.trajectory, target, source);
      const SynthesizedView v = synthesize_view(c.seq.frames[source], warp_coordinates(gt.depths[target], K, exp_se3(xi)));
      EXPECT_LE(photometric_loss(c.seq.frames[target], v.image, v.mask, PhotometricConfig{}).value, 1e-4)
          << target << "<-" << source;
    }
  }
}

TEST(Scene, GenerateSequenceIsDeterministic) {
  const auto make = [] {
    return generate_sequence(three_plane_scene(40, 30, 9, 3), default_synthetic_intrinsics(), default_trajectory(4, 9), 4);
  };
  const Sequence a = make();
  const Sequence b = make();
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_EQ(a.truth.depths, b.truth.depths);
  EXPECT_EQ(default_trajectory(4, 9)[2].to_array(), default_trajectory(4, 9)[2].to_array());
}

TEST(SceneProperty, TextureStaysInRange) {
  proptest::for_all("texture range", [](proptest::Gen &g) {
    const std::uint64_t seed = g.bits();
    const double scale = g.uniform(0.1, 50);
    const ProceduralTexture t(seed, scale);
    const SolidTexture s(seed, scale);
    for (int i = 0; i < 20; ++i) {
      const auto a = t(g.uniform(-1e3, 1e3), g.uniform(-1e3, 1e3));
      const auto b = s(g.vec3(-1e3, 1e3));
      for (int c = 0; c < kMaxChannels; ++c) {
        EXPECT_GE(a[c], 0.05 - 1e-12);
        EXPECT_LE(a[c], 0.95 + 1e-12);
        EXPECT_GE(b[c], 0.0);
        EXPECT_LE(b[c], 1.0);
      }
    }
  });
}

TEST(SceneProperty, RenderedDepthIsExact) {
  proptest::for_all("ray cast", [](proptest::Gen &g) {
    const int w = g.integer(8, 40), h = g.integer(6, 30);
    const SceneSpec spec = three_plane_scene(w, h, g.bits() % 1000);
    Twist xi = g.twist(0.05, 0.2);
    const Pose pose = exp_se3(xi).pose;
    const IntrinsicMatrix K = realize_intrinsics(default_synthetic_intrinsics(), w, h).K;
    const RenderedView v = render_view(spec, K, pose);
    for (int i = 0; i < 5; ++i) {
      const int x = g.integer(0, w - 1), y = g.integer(0, h - 1);
      const double expected = ray_cast_depth(spec, K, pose, x, y);
      EXPECT_LE(std::abs(v.depth.at(x, y) - expected), 1e-12 * expected);
    }
  });
}
