#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfcal/eval.hpp"
#include "selfcal/optimizer.hpp"
#include "selfcal/problem.hpp"
#include "selfcal/scene.hpp"

namespace selfcal {

struct LevelRecord {
  /// 0 for the initial grid, k for the k-th refinement stage.
  int stage = 0;
  int level = 0;
  int width = 0;
  int height = 0;
  std::vector<double> history;
  StopReason stop_reason = StopReason::kIterationLimit;
  int iterations = 0;
};

struct PairRecord {
  int target = 0;
  int source = 0;
  Twist twist;
  /// Target-to-source pose realized from `twist`.
  Pose pose;
};

struct PairError {
  int target = 0;
  int source = 0;
  double rotation_error_rad = 0.0;
  double translation_direction_error_rad = 0.0;
};

struct FrameDepthErrors {
  int frame = 0;
  DepthMetrics metrics;
};

struct TruthComparison {
  double fx_rel_error = 0.0;
  double fy_rel_error = 0.0;
  /// Principal-point errors in normalized units (fraction of width/height).
  double cx_n_error = 0.0;
  double cy_n_error = 0.0;
  std::vector<PairError> pairs;
  /// Median-scaled depth errors per target frame, when both sides carry depth.
  std::vector<FrameDepthErrors> depths;
};

struct CalibError {
  int level = -1;
  int iteration = -1;
  std::string message;
};

struct CalibReport {
  int width = 0;
  int height = 0;
  IntrinsicParams intrinsics;
  IntrinsicMatrix realized;
  std::vector<PairRecord> pairs;
  /// Target frame index and full-resolution depth for every snippet.
  std::vector<int> depth_frames;
  std::vector<DepthMap> depths;
  /// Where the depths were written, if they were (filled by the caller).
  std::vector<std::string> depth_files;
  /// Full-resolution (level 0) objective at the initial and the returned parameters.
  double initial_objective = 0.0;
  double final_objective = 0.0;
  /// Coarsest level first, in the order the levels were optimized.
  std::vector<LevelRecord> levels;
  StopReason stop_reason = StopReason::kIterationLimit;
  std::optional<CalibError> error;
  double wall_clock_seconds = 0.0;
  std::optional<TruthComparison> comparison;
  /// Whether depth comparisons rescale by the median ratio (set by the caller).
  bool median_scaling = true;
  /// Final parameters (not serialized).
  ParamVector params;
};

/// A further coarse-to-fine pass after re-expressing the depth grids at a finer size.
struct RefineStage {
  int grid_rows = 0;
  int grid_cols = 0;
  /// One entry per pyramid level, as for the first pass.
  std::vector<AdamConfig> schedule;
};

struct Regridded {
  CalibProblem problem;
  ParamVector params;
};

/**
 * Same problem with rows x cols depth grids. Each new grid reproduces the old
 * grid's full-resolution depth at its nodes; intrinsics and twists are copied.
 * Throws ShapeError on a layout mismatch and ProblemError for grids under 2x2.
 */
Regridded regrid(const CalibProblem &problem, const ParamVector &params, int rows, int cols);

/**
 * Coarse-to-fine joint optimization. `schedule[l]` configures pyramid level l;
 * levels run from the coarsest to level 0 and each starts from the previous
 * level's best iterate. Divergence is reported through `error` with the
 * parameters reached so far, not thrown.
 */
CalibReport calibrate(const CalibProblem &problem, const ParamVector &init, const std::vector<AdamConfig> &schedule);

/**
 * As above, then one more pass per refinement stage, each on regridded depth.
 * `initial_objective` is measured on the initial grids and `final_objective`
 * on the grids of the last stage that ran.
 */
CalibReport calibrate(const CalibProblem &problem, const ParamVector &init, const std::vector<AdamConfig> &schedule,
                      const std::vector<RefineStage> &refinements);

/**
 * Focal/principal-point errors, per-pair rotation and translation-direction
 * angles, and depth metrics for every report depth with a ground-truth map.
 * Throws ShapeError when the resolutions differ.
 */
TruthComparison compare_to_truth(const CalibReport &report, const GroundTruth &truth, bool median_scaling = true);

/// Angle between two translation directions; 0 when both vanish.
double direction_angle(const Eigen::Vector3d &a, const Eigen::Vector3d &b);

}  // namespace selfcal
