#include "selfcal/scene.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "selfcal/errors.hpp"

namespace selfcal {

double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

ProceduralTexture::ProceduralTexture(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return lo + (hi - lo) * unit_double(rng()); };
  for (auto &channel : waves_) {
    std::array<double, kWaves> wavelength{};
    double total = 0.0;
    for (int k = 0; k < kWaves; ++k) {
      wavelength[k] = uniform(0.8, 3.0) * scale;
      total += wavelength[k];
    }
    for (int k = 0; k < kWaves; ++k) {
      const double angle = uniform(0.0, std::numbers::pi);
      const double freq = 2.0 * std::numbers::pi / wavelength[k];
      // Long waves carry more energy than short ones.
      channel[k] = {freq * std::cos(angle), freq * std::sin(angle), uniform(0.0, 2.0 * std::numbers::pi),
                    0.45 * wavelength[k] / total};
    }
  }
}

std::array<double, kMaxChannels> ProceduralTexture::operator()(double u, double v) const {
  std::array<double, kMaxChannels> out{};
  for (int c = 0; c < kMaxChannels; ++c) {
    double value = 0.5;
    for (const Wave &w : waves_[c]) value += w.amplitude * std::sin(w.kx * u + w.ky * v + w.phase);
    out[c] = value;
  }
  return out;
}

std::array<double, kMaxChannels> procedural_texture(std::uint64_t seed, double u, double v, double scale) {
  return ProceduralTexture(seed, scale)(u, v);
}

SolidTexture::SolidTexture(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  auto uniform = [&rng](double lo, double hi) { return lo + (hi - lo) * unit_double(rng()); };
  for (auto &channel : waves_) {
    std::array<double, kWaves> wavelength{};
    double total = 0.0;
    for (int k = 0; k < kWaves; ++k) {
      wavelength[k] = uniform(0.8, 3.0) * scale;
      total += wavelength[k];
    }
    for (int k = 0; k < kWaves; ++k) {
      // Uniform direction on the sphere.
      const double z = uniform(-1.0, 1.0);
      const double phi = uniform(0.0, 2.0 * std::numbers::pi);
      const double r = std::sqrt(1.0 - z * z);
      const Eigen::Vector3d dir(r * std::cos(phi), r * std::sin(phi), z);
      channel[k] = {dir * (2.0 * std::numbers::pi / wavelength[k]), uniform(0.0, 2.0 * std::numbers::pi),
                    0.45 * wavelength[k] / total};
    }
  }
}

std::array<double, kMaxChannels> SolidTexture::operator()(const Eigen::Vector3d &x) const {
  std::array<double, kMaxChannels> out{};
  for (int c = 0; c < kMaxChannels; ++c) {
    double value = 0.5;
    for (const Wave &w : waves_[c]) value += w.amplitude * std::sin(w.k.dot(x) + w.phase);
    out[c] = value;
  }
  return out;
}

void SceneSpec::validate() const {
  if (planes.empty()) throw DomainError("scene needs at least one plane");
  if (width < 2 || height < 2) throw ShapeError("scene resolution must be at least 2x2");
  if (channels != 1 && channels != 3) throw ShapeError("scene must render 1 or 3 channels");
  for (const ScenePlane &p : planes) {
    if (!(p.distance > 0.0)) throw DomainError("plane distance must be positive");
    if (std::abs(p.normal.norm() - 1.0) > 1e-9) throw DomainError("plane normal must be unit length");
    if (!(p.texture_scale > 0.0)) throw DomainError("texture scale must be positive");
  }
  if (background && !(*background >= 0.0 && *background <= 1.0)) throw DomainError("background must lie in [0, 1]");
  if (!(background_depth > 0.0)) throw DomainError("background depth must be positive");
  if (solid_texture && !(solid_texture->scale > 0.0)) throw DomainError("texture scale must be positive");
}

namespace {

struct PlaneFrame {
  Eigen::Vector3d e1;
  Eigen::Vector3d e2;
};

PlaneFrame plane_frame(const Eigen::Vector3d &n) {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  if (std::abs(n.y()) < std::abs(n.x()) && std::abs(n.y()) <= std::abs(n.z())) {
    axis = Eigen::Vector3d::UnitY();
  } else if (std::abs(n.z()) < std::abs(n.x())) {
    axis = Eigen::Vector3d::UnitZ();
  }
  const Eigen::Vector3d e1 = n.cross(axis).normalized();
  return {e1, n.cross(e1)};
}

}  // namespace

RenderedView render_view(const SceneSpec &spec, const IntrinsicMatrix &K, const Pose &pose_world_to_cam) {
  spec.validate();
  std::vector<ProceduralTexture> textures;
  std::vector<PlaneFrame> frames;
  for (const ScenePlane &p : spec.planes) {
    textures.emplace_back(p.texture_seed, p.texture_scale);
    frames.push_back(plane_frame(p.normal));
  }
  std::optional<SolidTexture> solid;
  if (spec.solid_texture) solid.emplace(spec.solid_texture->seed, spec.solid_texture->scale);
  const Eigen::Matrix3d Rt = pose_world_to_cam.R.transpose();
  const Eigen::Vector3d center = -(Rt * pose_world_to_cam.t);

  RenderedView out;
  out.image = Image(spec.width, spec.height, spec.channels);
  std::vector<double> depth(std::size_t(spec.width) * spec.height);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Eigen::Vector3d ray_cam((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Eigen::Vector3d ray = Rt * ray_cam;
      double best = std::numeric_limits<double>::infinity();
      int hit = -1;
      for (std::size_t i = 0; i < spec.planes.size(); ++i) {
        const ScenePlane &p = spec.planes[i];
        const double denom = p.normal.dot(ray);
        if (denom == 0.0) continue;
        const double s = (p.distance - p.normal.dot(center)) / denom;
        if (s > 0.0 && s < best) {
          best = s;
          hit = static_cast<int>(i);
        }
      }
      const std::size_t pixel = std::size_t(y) * spec.width + x;
      if (hit < 0) {
        if (!spec.background) throw CoverageError(x, y);
        for (int c = 0; c < spec.channels; ++c) out.image.at(x, y, c) = *spec.background;
        depth[pixel] = spec.background_depth;
        continue;
      }
      // The camera-frame ray has unit z, so the ray parameter is the z-depth.
      depth[pixel] = best;
      const Eigen::Vector3d world = center + best * ray;
      const auto color =
          solid ? (*solid)(world) : textures[hit](world.dot(frames[hit].e1), world.dot(frames[hit].e2));
      for (int c = 0; c < spec.channels; ++c) out.image.at(x, y, c) = color[c];
    }
  }
  out.depth = DepthMap(spec.width, spec.height, std::move(depth));
  return out;
}

Sequence generate_sequence(const SceneSpec &spec, const IntrinsicParams &gt_intrinsics,
                           const std::vector<Twist> &trajectory, int frames) {
  if (frames < 3) throw ProblemError("a sequence needs at least 3 frames");
  if (static_cast<int>(trajectory.size()) != frames - 1) {
    throw ProblemError("trajectory must hold frames - 1 twists");
  }
  spec.validate();
  const IntrinsicMatrix K = realize_intrinsics(gt_intrinsics, spec.width, spec.height).K;
  Sequence seq;
  seq.truth.intrinsics = gt_intrinsics;
  seq.truth.width = spec.width;
  seq.truth.height = spec.height;
  Pose pose = Pose::identity();
  for (int k = 0; k < frames; ++k) {
    if (k > 0) pose = compose(exp_se3(trajectory[k - 1]).pose, pose);
    RenderedView view = render_view(spec, K, pose);
    seq.frames.push_back(std::move(view.image));
    seq.truth.poses.push_back(pose);
    seq.truth.depths.push_back(std::move(view.depth));
  }
  return seq;
}

Pose relative_pose(const GroundTruth &truth, int target, int source) {
  return compose(truth.poses.at(source), inverse(truth.poses.at(target)));
}

SceneSpec three_plane_scene(int width, int height, std::uint64_t seed, int channels) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.channels = channels;
  const Eigen::Vector3d floor = Eigen::Vector3d(0.0, 1.0, 0.5).normalized();
  const Eigen::Vector3d wall = Eigen::Vector3d(1.0, 0.0, 0.4).normalized();
  spec.planes = {
      {floor, 1.5 / Eigen::Vector3d(0.0, 1.0, 0.5).norm(), 3 * seed + 1, 1.0},
      {wall, 1.6 / Eigen::Vector3d(1.0, 0.0, 0.4).norm(), 3 * seed + 2, 1.0},
      {Eigen::Vector3d::UnitZ(), 5.0, 3 * seed + 3, 1.5},
  };
  spec.solid_texture = SolidTextureSpec{seed, 1.0};
  return spec;
}

SceneSpec fronto_parallel_scene(int width, int height, double distance, std::uint64_t seed, int channels) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.channels = channels;
  spec.planes = {{Eigen::Vector3d::UnitZ(), distance, seed, 1.0}};
  return spec;
}

SceneSpec scene_preset(const std::string &name, int width, int height, std::uint64_t seed, int channels) {
  if (name == "three-planes") return three_plane_scene(width, height, seed, channels);
  if (name == "fronto") return fronto_parallel_scene(width, height, 4.0, seed, channels);
  throw DomainError("unknown scene preset '" + name + "'");
}

IntrinsicParams default_synthetic_intrinsics() {
  IntrinsicParams p;
  p.log_fx_n = std::log(0.75);
  p.log_fy_n = std::log(1.0);
  p.cx_n = 0.52;
  p.cy_n = 0.48;
  return p;
}

std::vector<Twist> default_trajectory(int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto jitter = [&rng]() { return 0.7 + 0.6 * unit_double(rng()); };
  std::vector<Twist> out;
  for (int k = 1; k < frames; ++k) {
    Twist xi;
    xi.omega = Eigen::Vector3d(0.03 * jitter(), -0.06 * jitter(), 0.024 * jitter());
    xi.vel = Eigen::Vector3d(-0.06 * jitter(), 0.02 * jitter(), -0.12 * jitter());
    out.push_back(xi);
  }
  return out;
}

}  // namespace selfcal
