#include "selfcal/problem.hpp"

#include <algorithm>
#include <cmath>

#include "selfcal/errors.hpp"

namespace selfcal {

InvDepthGrid::InvDepthGrid(int rows, int cols, double fill)
    : InvDepthGrid(rows, cols, std::vector<double>(std::size_t(std::max(rows, 0)) * std::max(cols, 0), fill)) {}

InvDepthGrid::InvDepthGrid(int rows, int cols, std::vector<double> raw) : rows(rows), cols(cols), raw(std::move(raw)) {
  if (rows < 2 || cols < 2) throw ShapeError("depth grid needs at least 2x2 cells");
  if (this->raw.size() != std::size_t(rows) * cols) throw ShapeError("depth grid raw size does not match rows * cols");
}

void DisparityBounds::validate() const {
  if (!(min > 0.0 && max > min && std::isfinite(max))) throw DomainError("disparity bounds need 0 < min < max");
}

GridMapping GridMapping::corner_pinned(int width, int height, int rows, int cols) {
  GridMapping m;
  m.scale_x = width > 1 ? double(cols - 1) / (width - 1) : 0.0;
  m.scale_y = height > 1 ? double(rows - 1) / (height - 1) : 0.0;
  return m;
}

GridMapping GridMapping::for_level(int full_width, int full_height, int level, int rows, int cols) {
  const GridMapping full = corner_pinned(full_width, full_height, rows, cols);
  const double step = std::ldexp(1.0, level);
  const double origin = 0.5 * step - 0.5;
  GridMapping m;
  m.scale_x = full.scale_x * step;
  m.offset_x = full.scale_x * origin;
  m.scale_y = full.scale_y * step;
  m.offset_y = full.scale_y * origin;
  return m;
}

RealizedDepth realize_depth(const InvDepthGrid &grid, int width, int height, const DisparityBounds &bounds) {
  return realize_depth(grid, width, height, bounds, GridMapping::corner_pinned(width, height, grid.rows, grid.cols));
}

RealizedDepth realize_depth(const InvDepthGrid &grid, int width, int height, const DisparityBounds &bounds,
                            const GridMapping &mapping) {
  bounds.validate();
  if (grid.rows < 2 || grid.cols < 2 || grid.raw.size() != std::size_t(grid.rows) * grid.cols) {
    throw ShapeError("malformed depth grid");
  }
  const std::size_t n = std::size_t(width) * height;
  const double range = bounds.max - bounds.min;
  RealizedDepth out;
  std::vector<double> depth(n);
  out.disparity.resize(n);
  out.stencils.resize(n);
  out.d_disparity_d_raw.resize(n);

  // Horizontal stencil terms depend on x only.
  std::vector<int> col0(width);
  std::vector<double> col_frac(width);
  for (int x = 0; x < width; ++x) {
    const double g = std::clamp(mapping.scale_x * x + mapping.offset_x, 0.0, double(grid.cols - 1));
    col0[x] = std::min(static_cast<int>(g), grid.cols - 2);
    col_frac[x] = g - col0[x];
  }
  for (int y = 0; y < height; ++y) {
    const double gy = std::clamp(mapping.scale_y * y + mapping.offset_y, 0.0, double(grid.rows - 1));
    const int r0 = std::min(static_cast<int>(gy), grid.rows - 2);
    const double fy = gy - r0;
    for (int x = 0; x < width; ++x) {
      const std::size_t p = std::size_t(y) * width + x;
      const int c0 = col0[x];
      const double fx = col_frac[x];
      GridStencil &st = out.stencils[p];
      st.cells = {r0 * grid.cols + c0, r0 * grid.cols + c0 + 1, (r0 + 1) * grid.cols + c0,
                  (r0 + 1) * grid.cols + c0 + 1};
      st.weights = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
      double r = 0.0;
      for (int k = 0; k < 4; ++k) r += st.weights[k] * grid.raw[st.cells[k]];
      const double sig = 1.0 / (1.0 + std::exp(-r));
      const double disp = bounds.min + range * sig;
      out.disparity[p] = disp;
      out.d_disparity_d_raw[p] = range * sig * (1.0 - sig);
      depth[p] = 1.0 / disp;
    }
  }
  out.depth = DepthMap(width, height, std::move(depth));
  return out;
}

InvDepthGrid grid_from_depth(const DepthMap &depth, int rows, int cols, const DisparityBounds &bounds) {
  bounds.validate();
  InvDepthGrid grid(rows, cols);
  const int w = depth.width();
  const int h = depth.height();
  const double range = bounds.max - bounds.min;
  for (int i = 0; i < rows; ++i) {
    const double py = h > 1 ? double(i) * (h - 1) / (rows - 1) : 0.0;
    const int y0 = std::min(static_cast<int>(py), std::max(h - 2, 0));
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = py - y0;
    for (int j = 0; j < cols; ++j) {
      const double px = w > 1 ? double(j) * (w - 1) / (cols - 1) : 0.0;
      const int x0 = std::min(static_cast<int>(px), std::max(w - 2, 0));
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = px - x0;
      // Interpolate disparity, the quantity the grid represents.
      const double disp = (1 - fy) * ((1 - fx) / depth.at(x0, y0) + fx / depth.at(x1, y0)) +
                          fy * ((1 - fx) / depth.at(x0, y1) + fx / depth.at(x1, y1));
      const double s = std::clamp((disp - bounds.min) / range, 1e-12, 1.0 - 1e-12);
      grid.raw[std::size_t(i) * cols + j] = std::log(s / (1.0 - s));
    }
  }
  return grid;
}

const char *to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::kIntrinsics:
      return "intrinsics";
    case ParamGroup::kTwists:
      return "twists";
    case ParamGroup::kDepth:
      return "depth";
  }
  return "unknown";
}

ParamGroup ParamLayout::group_of(std::size_t index) const {
  if (index < IntrinsicParams::kSize) return ParamGroup::kIntrinsics;
  if (index < grid_offset(0)) return ParamGroup::kTwists;
  return ParamGroup::kDepth;
}

void ParamVector::check() const {
  if (values.size() != layout.size()) throw ShapeError("parameter vector length does not match its layout");
}

IntrinsicParams ParamVector::intrinsics() const {
  return IntrinsicParams::from_array(std::span(values).first(IntrinsicParams::kSize));
}

void ParamVector::set_intrinsics(const IntrinsicParams &p) {
  const auto a = p.to_array();
  std::copy(a.begin(), a.end(), values.begin());
}

Twist ParamVector::twist(int pair) const {
  return Twist::from_array(std::span(values).subspan(layout.twist_offset(pair), Twist::kSize));
}

void ParamVector::set_twist(int pair, const Twist &xi) {
  const auto a = xi.to_array();
  std::copy(a.begin(), a.end(), values.begin() + static_cast<std::ptrdiff_t>(layout.twist_offset(pair)));
}

InvDepthGrid ParamVector::grid(int target) const {
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(layout.grid_offset(target));
  return InvDepthGrid(layout.grid_rows, layout.grid_cols,
                      std::vector<double>(first, first + static_cast<std::ptrdiff_t>(layout.grid_cells())));
}

void ParamVector::set_grid(int target, const InvDepthGrid &grid) {
  if (grid.rows != layout.grid_rows || grid.cols != layout.grid_cols) throw ShapeError("grid size does not match layout");
  std::copy(grid.raw.begin(), grid.raw.end(), values.begin() + static_cast<std::ptrdiff_t>(layout.grid_offset(target)));
}

std::span<const double> ParamVector::group_view(ParamGroup group) const {
  const std::span<const double> all(values);
  switch (group) {
    case ParamGroup::kIntrinsics:
      return all.first(IntrinsicParams::kSize);
    case ParamGroup::kTwists:
      return all.subspan(IntrinsicParams::kSize, layout.grid_offset(0) - IntrinsicParams::kSize);
    case ParamGroup::kDepth:
      return all.subspan(layout.grid_offset(0));
  }
  return {};
}

int CalibProblem::first_pair(int snippet) const {
  int pair = 0;
  for (int s = 0; s < snippet; ++s) pair += static_cast<int>(snippets[s].contexts.size());
  return pair;
}

CalibProblem CalibProblem::at_level(int level) const {
  if (level < 0 || level >= level_count()) throw ProblemError("pyramid level out of range");
  CalibProblem p = *this;
  p.first_level = level;
  p.last_level = level;
  return p;
}

void CalibProblem::validate() const {
  if (pyramids.empty()) throw ProblemError("problem has no frames");
  if (snippets.empty()) throw ProblemError("problem has no snippets");
  const std::size_t levels = pyramids.front().size();
  if (levels == 0) throw ProblemError("empty pyramid");
  for (const Pyramid &pyr : pyramids) {
    if (pyr.size() != levels) throw ProblemError("frames have different pyramid depths");
    for (std::size_t l = 0; l < levels; ++l) {
      if (!pyr[l].same_shape(pyramids.front()[l])) throw ProblemError("frames differ in dimensions");
    }
  }
  if (first_level < 0 || last_level < first_level || last_level >= static_cast<int>(levels)) {
    throw ProblemError("active level range is invalid");
  }
  int pairs = 0;
  for (const Snippet &s : snippets) {
    if (s.target < 0 || s.target >= static_cast<int>(pyramids.size())) throw ProblemError("snippet target out of range");
    if (s.contexts.empty()) throw ProblemError("snippet without context frames");
    for (int c : s.contexts) {
      if (c < 0 || c >= static_cast<int>(pyramids.size())) throw ProblemError("snippet context out of range");
      if (c == s.target) throw ProblemError("context frame equals the target frame");
    }
    pairs += static_cast<int>(s.contexts.size());
  }
  if (layout.num_pairs != pairs || layout.num_targets != static_cast<int>(snippets.size())) {
    throw ProblemError("parameter layout inconsistent with snippets");
  }
  if (layout.grid_rows < 2 || layout.grid_cols < 2) throw ProblemError("depth grid needs at least 2x2 cells");
  photometric.validate();
  disparity.validate();
}

InitializedProblem init_problem(const std::vector<Image> &frames, const EngineConfig &cfg) {
  if (frames.size() < 3) throw ProblemError("calibration needs at least 3 frames, got " + std::to_string(frames.size()));
  for (const Image &f : frames) {
    if (!f.same_shape(frames.front())) throw ProblemError("frames have mixed dimensions or channel counts");
  }
  if (cfg.grid_rows < 2 || cfg.grid_cols < 2) throw ProblemError("depth grid needs at least 2x2 cells");

  InitializedProblem out;
  CalibProblem &problem = out.problem;
  try {
    for (const Image &f : frames) problem.pyramids.push_back(build_pyramid(f, cfg.pyramid_levels));
  } catch (const ShapeError &e) {
    throw ProblemError(e.what());
  }
  for (int t = 1; t + 1 < static_cast<int>(frames.size()); ++t) problem.snippets.push_back({t, {t - 1, t + 1}});
  problem.layout.num_targets = static_cast<int>(problem.snippets.size());
  problem.layout.num_pairs = 2 * problem.layout.num_targets;
  problem.layout.grid_rows = cfg.grid_rows;
  problem.layout.grid_cols = cfg.grid_cols;
  problem.photometric = cfg.photometric;
  problem.disparity = cfg.disparity;
  problem.first_level = 0;
  problem.last_level = cfg.pyramid_levels - 1;
  problem.validate();

  out.params = ParamVector(problem.layout);
  out.params.set_intrinsics(cfg.intrinsics_init.value_or(IntrinsicParams::defaults()));
  return out;
}

}  // namespace selfcal
