#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "selfcal/camera.hpp"
#include "selfcal/geometry.hpp"
#include "selfcal/image.hpp"

namespace selfcal {

/**
 * Smooth seeded texture: 0.5 plus a fixed set of sinusoids per channel.
 * Amplitudes sum to 0.45, so values stay within [0.05, 0.95]. Wavelengths lie
 * between 0.8 and 3 times `scale`.
 */
class ProceduralTexture {
 public:
  static constexpr int kWaves = 5;

  ProceduralTexture(std::uint64_t seed, double scale);

  std::array<double, kMaxChannels> operator()(double u, double v) const;

 private:
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::array<std::array<Wave, kWaves>, kMaxChannels> waves_{};
};

std::array<double, kMaxChannels> procedural_texture(std::uint64_t seed, double u, double v, double scale);

/// The 3-D counterpart of ProceduralTexture: sinusoids over world coordinates.
class SolidTexture {
 public:
  static constexpr int kWaves = 6;

  SolidTexture(std::uint64_t seed, double scale);

  std::array<double, kMaxChannels> operator()(const Eigen::Vector3d &x) const;

 private:
  struct Wave {
    Eigen::Vector3d k;
    double phase, amplitude;
  };
  std::array<std::array<Wave, kWaves>, kMaxChannels> waves_{};
};

struct SolidTextureSpec {
  std::uint64_t seed = 0;
  double scale = 1.0;
};

struct ScenePlane {
  /// Unit normal; the plane is { X : normal . X = distance } in world coordinates.
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double distance = 1.0;
  std::uint64_t texture_seed = 0;
  double texture_scale = 1.0;
};

struct SceneSpec {
  std::vector<ScenePlane> planes;
  int width = 160;
  int height = 120;
  int channels = 1;
  /// Intensity for rays that miss every plane; without it such rays are an error.
  std::optional<double> background;
  /// Depth recorded for background pixels.
  double background_depth = 100.0;
  /// When set, every plane is colored by one world-space texture instead of its
  /// own plane-coordinate texture, so intensity stays continuous across creases.
  std::optional<SolidTextureSpec> solid_texture;

  /// Throws DomainError/ShapeError on broken invariants.
  void validate() const;
};

struct GroundTruth {
  IntrinsicParams intrinsics;
  int width = 0;
  int height = 0;
  /// World-to-camera pose per frame; frame 0 is the identity.
  std::vector<Pose> poses;
  std::vector<DepthMap> depths;
};

struct RenderedView {
  Image image;
  DepthMap depth;
};

/// Analytic ray casting against the planes: nearest positive hit per pixel center.
RenderedView render_view(const SceneSpec &spec, const IntrinsicMatrix &K, const Pose &pose_world_to_cam);

struct Sequence {
  std::vector<Image> frames;
  GroundTruth truth;
};

/**
 * Renders `frames` views. Frame k's world-to-camera pose is
 * exp(xi_k) * ... * exp(xi_1), i.e. trajectory[k-1] moves camera k-1 to camera k.
 * Throws ProblemError for fewer than 3 frames or a trajectory of the wrong length.
 */
Sequence generate_sequence(const SceneSpec &spec, const IntrinsicParams &gt_intrinsics,
                           const std::vector<Twist> &trajectory, int frames);

/// Relative pose mapping target-camera points into the source camera.
Pose relative_pose(const GroundTruth &truth, int target, int source);

/// Two slanted planes and one fronto-parallel back wall, seen from inside, under one solid texture.
SceneSpec three_plane_scene(int width, int height, std::uint64_t seed, int channels = 1);
/// A single fronto-parallel plane at the given distance.
SceneSpec fronto_parallel_scene(int width, int height, double distance, std::uint64_t seed, int channels = 1);
SceneSpec scene_preset(const std::string &name, int width, int height, std::uint64_t seed, int channels);

/// Intrinsics used for generated sequences (fx = 0.75 W, fy = H, off-center principal point).
IntrinsicParams default_synthetic_intrinsics();
/// Mixed rotation and translation frame-to-frame motion, deterministic in the seed.
std::vector<Twist> default_trajectory(int frames, std::uint64_t seed);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double unit_double(std::uint64_t bits);

}  // namespace selfcal
