#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "selfcal/camera.hpp"
#include "selfcal/geometry.hpp"
#include "selfcal/image.hpp"
#include "selfcal/objective_config.hpp"

namespace selfcal {

/// Trainable coarse inverse-depth field standing in for a depth network.
struct InvDepthGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> raw;

  InvDepthGrid() = default;
  InvDepthGrid(int rows, int cols, double fill = 0.0);
  InvDepthGrid(int rows, int cols, std::vector<double> raw);
};

struct DisparityBounds {
  double min = 0.01;
  double max = 10.0;

  void validate() const;
};

/// Affine map from pixel index to continuous grid coordinate, clamped to the grid.
struct GridMapping {
  double scale_x = 1.0;
  double offset_x = 0.0;
  double scale_y = 1.0;
  double offset_y = 0.0;

  /// Grid corners on the corner pixel centers of a width x height image.
  static GridMapping corner_pinned(int width, int height, int rows, int cols);
  /// Pyramid level l of a full-resolution image: a level pixel is first moved to its
  /// full-resolution center (i + 0.5) 2^l - 0.5 and then corner-pinned at full resolution.
  static GridMapping for_level(int full_width, int full_height, int level, int rows, int cols);
};

/// Up to four grid cells that one pixel's disparity depends on.
struct GridStencil {
  std::array<int, 4> cells{};
  std::array<double, 4> weights{};
};

struct RealizedDepth {
  DepthMap depth;
  std::vector<double> disparity;
  std::vector<GridStencil> stencils;
  /// d disparity / d (upsampled raw) per pixel; multiply by a stencil weight for one cell.
  std::vector<double> d_disparity_d_raw;

  /// d depth(pixel) / d raw(stencil cell k).
  double d_depth_d_cell(std::size_t pixel, int k) const {
    const double d = depth[pixel];
    return -d * d * d_disparity_d_raw[pixel] * stencils[pixel].weights[k];
  }
};

/**
 * disparity = min + (max - min) sigmoid(bilinear(raw)), depth = 1 / disparity.
 * Depth is always inside [1/max, 1/min]. Throws DomainError unless max > min > 0.
 */
RealizedDepth realize_depth(const InvDepthGrid &grid, int width, int height, const DisparityBounds &bounds);
RealizedDepth realize_depth(const InvDepthGrid &grid, int width, int height, const DisparityBounds &bounds,
                            const GridMapping &mapping);

/// Raw grid values whose realization reproduces `depth` at the grid nodes (corner-pinned).
/// Exact at every pixel when the grid has the depth map's resolution.
InvDepthGrid grid_from_depth(const DepthMap &depth, int rows, int cols, const DisparityBounds &bounds);

enum class ParamGroup { kIntrinsics = 0, kTwists = 1, kDepth = 2 };
inline constexpr std::array<ParamGroup, 3> kParamGroups = {ParamGroup::kIntrinsics, ParamGroup::kTwists,
                                                           ParamGroup::kDepth};
const char *to_string(ParamGroup group);

/// Offsets of [4 intrinsics | 6 per context pair | rows*cols per target] in the flat vector.
struct ParamLayout {
  int num_pairs = 0;
  int num_targets = 0;
  int grid_rows = 0;
  int grid_cols = 0;

  std::size_t twist_offset(int pair) const { return IntrinsicParams::kSize + std::size_t(Twist::kSize) * pair; }
  std::size_t grid_cells() const { return std::size_t(grid_rows) * grid_cols; }
  std::size_t grid_offset(int target) const {
    return IntrinsicParams::kSize + std::size_t(Twist::kSize) * num_pairs + grid_cells() * target;
  }
  std::size_t size() const { return grid_offset(num_targets); }
  ParamGroup group_of(std::size_t index) const;

  friend bool operator==(const ParamLayout &, const ParamLayout &) = default;
};

/// Flat parameter vector with its layout. Gradients use the same shape.
struct ParamVector {
  ParamLayout layout;
  std::vector<double> values;

  ParamVector() = default;
  explicit ParamVector(const ParamLayout &layout) : layout(layout), values(layout.size(), 0.0) {}

  void check() const;
  IntrinsicParams intrinsics() const;
  void set_intrinsics(const IntrinsicParams &p);
  Twist twist(int pair) const;
  void set_twist(int pair, const Twist &xi);
  InvDepthGrid grid(int target) const;
  void set_grid(int target, const InvDepthGrid &grid);
  std::span<const double> group_view(ParamGroup group) const;
};
using ParamGradient = ParamVector;

/// A target frame and the context frames it is reconstructed from.
struct Snippet {
  int target = 0;
  std::vector<int> contexts;
};

struct CalibProblem {
  /// One pyramid per frame; all share dimensions and level count.
  std::vector<Pyramid> pyramids;
  std::vector<Snippet> snippets;
  ParamLayout layout;
  PhotometricConfig photometric;
  DisparityBounds disparity;
  /// Inclusive range of pyramid levels that enter the objective.
  int first_level = 0;
  int last_level = 0;

  int full_width() const { return pyramids.front().front().width(); }
  int full_height() const { return pyramids.front().front().height(); }
  int level_count() const { return static_cast<int>(pyramids.front().size()); }
  /// Index of the first twist of snippet `s` (pairs are numbered snippet by snippet).
  int first_pair(int snippet) const;
  /// Copy restricted to a single pyramid level.
  CalibProblem at_level(int level) const;

  /// Throws ProblemError on any broken invariant.
  void validate() const;
};

struct EngineConfig {
  int pyramid_levels = 4;
  int grid_rows = 12;
  int grid_cols = 16;
  DisparityBounds disparity;
  PhotometricConfig photometric;
  std::optional<IntrinsicParams> intrinsics_init;
};

struct InitializedProblem {
  CalibProblem problem;
  ParamVector params;
};

/// Snippets (t; t-1, t+1) for every interior frame, zero twists and grids,
/// default or overridden intrinsics. Throws ProblemError for < 3 frames or mixed sizes.
InitializedProblem init_problem(const std::vector<Image> &frames, const EngineConfig &cfg);

}  // namespace selfcal
