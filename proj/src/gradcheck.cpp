#include "selfcal/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "selfcal/errors.hpp"
#include "selfcal/objective.hpp"
#include "selfcal/scene.hpp"
#include "selfcal/synthesis.hpp"

namespace selfcal {
namespace {

constexpr int kLevels = 2;
constexpr int kGridRows = 6;
constexpr int kGridCols = 8;
constexpr double kMinIntegerDistance = 0.05;

Image texture_image(std::uint64_t seed, int width, int height, double lo, double hi) {
  const ProceduralTexture texture(seed, 12.0);
  Image img(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Texture values lie in [0.05, 0.95].
      const double t = (texture(x, y)[0] - 0.05) / 0.9;
      img.at(x, y, 0) = lo + (hi - lo) * t;
    }
  }
  return img;
}

double integer_distance(double x) { return std::abs(x - std::round(x)); }

/// Smallest distance of any valid warp coordinate to an integer, over all levels and pairs.
double warp_clearance(const CalibProblem &problem, const ParamVector &params) {
  double worst = 1.0;
  const IntrinsicParams intr = params.intrinsics();
  const InvDepthGrid grid = params.grid(0);
  for (int level = problem.first_level; level <= problem.last_level; ++level) {
    const Image &img = problem.pyramids.front()[level];
    const RealizedIntrinsics K = level_intrinsics(intr, problem.full_width(), problem.full_height(), level);
    const RealizedDepth depth =
        realize_depth(grid, img.width(), img.height(), problem.disparity,
                      GridMapping::for_level(problem.full_width(), problem.full_height(), level, grid.rows, grid.cols));
    for (int pair = 0; pair < params.layout.num_pairs; ++pair) {
      const WarpField field = warp_coordinates(depth.depth, K, exp_se3(params.twist(pair)));
      for (const WarpPixel &px : field.pixels) {
        if (!px.valid) continue;
        worst = std::min({worst, integer_distance(px.u), integer_distance(px.v)});
      }
    }
  }
  return worst;
}

}  // namespace

GradcheckCase make_gradcheck_case(std::uint64_t seed, int width, int height) {
  if (width < 16 || height < 16) throw ShapeError("gradient-check images must be at least 16x16");
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 17);
  auto uniform = [&rng](double lo, double hi) { return lo + (hi - lo) * unit_double(rng()); };
  auto sign = [&rng]() { return (rng() & 1) ? 1.0 : -1.0; };

  GradcheckCase out;
  CalibProblem &problem = out.problem;
  const std::uint64_t tex = rng();
  problem.pyramids = {
      build_pyramid(texture_image(tex + 1, width, height, 0.07, 0.38), kLevels),
      build_pyramid(texture_image(tex + 2, width, height, 0.57, 0.93), kLevels),
      build_pyramid(texture_image(tex + 3, width, height, 0.07, 0.38), kLevels),
  };
  problem.snippets = {{1, {0, 2}}};
  problem.layout = {2, 1, kGridRows, kGridCols};
  problem.first_level = 0;
  problem.last_level = kLevels - 1;
  problem.validate();

  for (int attempt = 0; attempt < 1000; ++attempt) {
    ParamVector params(problem.layout);
    IntrinsicParams intr;
    intr.log_fx_n = std::log(uniform(0.7, 0.9));
    intr.log_fy_n = std::log(uniform(0.9, 1.1));
    intr.cx_n = uniform(0.45, 0.55);
    intr.cy_n = uniform(0.45, 0.55);
    params.set_intrinsics(intr);
    const IntrinsicMatrix K = realize_intrinsics(intr, width, height).K;

    // Depth increases monotonically along both grid axes, so no smoothness
    // difference is ever zero.
    const double base = uniform(-3.6, -3.2);
    const double step_x = uniform(0.005, 0.01);
    const double step_y = uniform(0.005, 0.01);
    InvDepthGrid grid(kGridRows, kGridCols);
    for (int r = 0; r < kGridRows; ++r) {
      for (int c = 0; c < kGridCols; ++c) grid.raw[std::size_t(r) * kGridCols + c] = base + step_x * c + step_y * r;
    }
    params.set_grid(0, grid);
    const double z = 1.0 / (problem.disparity.min +
                            (problem.disparity.max - problem.disparity.min) / (1.0 + std::exp(-base)));

    for (int pair = 0; pair < 2; ++pair) {
      Twist xi;
      xi.omega = Eigen::Vector3d(uniform(-3e-4, 3e-4), uniform(-3e-4, 3e-4), uniform(-3e-4, 3e-4));
      const double du = sign() * uniform(1.35, 1.65);
      const double dv = sign() * uniform(1.35, 1.65);
      xi.vel = Eigen::Vector3d(du * z / K.fx, dv * z / K.fy, uniform(-2e-3, 2e-3));
      params.set_twist(pair, xi);
    }
    const double clearance = warp_clearance(problem, params);
    if (clearance >= kMinIntegerDistance) {
      out.params = std::move(params);
      out.min_integer_distance = clearance;
      return out;
    }
  }
  throw ProblemError("could not draw a gradient-check problem with clear warp offsets");
}

double GradcheckResult::overall() const { return *std::max_element(worst.begin(), worst.end()); }

double relative_error(double a, double b, double floor) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < floor) return 0.0;
  return std::abs(a - b) / scale;
}

GradcheckResult check_gradient(const CalibProblem &problem, const ParamVector &params, double eps) {
  if (!(eps > 0.0)) throw DomainError("finite-difference step must be positive");
  const ParamGradient analytic = gradient(problem, params);
  const ParamGradient numeric = finite_difference_gradient(problem, params, eps);
  GradcheckResult result;
  for (std::size_t i = 0; i < analytic.values.size(); ++i) {
    const int g = static_cast<int>(params.layout.group_of(i));
    result.worst[g] = std::max(result.worst[g], relative_error(analytic.values[i], numeric.values[i]));
    ++result.compared[g];
  }
  return result;
}

}  // namespace selfcal
