#include "selfcal/engine.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

#include "selfcal/errors.hpp"
#include "selfcal/objective.hpp"

namespace selfcal {
namespace {

/// Realizing at (W/2^l, H/2^l) must equal the full-resolution matrix scaled by 2^-l.
void check_scale_equivariance(const IntrinsicParams &p, int width, int height, int level) {
  const double s = std::ldexp(1.0, -level);
  const IntrinsicMatrix full = realize_intrinsics(p, width, height).K;
  const IntrinsicMatrix lvl = realize_intrinsics(p, width * s, height * s).K;
  if (lvl.fx != full.fx * s || lvl.fy != full.fy * s || lvl.cx != full.cx * s || lvl.cy != full.cy * s) {
    throw std::logic_error("intrinsics are not scale-equivariant across pyramid levels");
  }
}

void fill_outputs(CalibReport &report, const CalibProblem &problem, const ParamVector &params) {
  report.params = params;
  report.intrinsics = params.intrinsics();
  report.realized = realize_intrinsics(report.intrinsics, report.width, report.height).K;
  report.pairs.clear();
  report.depth_frames.clear();
  report.depths.clear();
  int pair = 0;
  for (std::size_t s = 0; s < problem.snippets.size(); ++s) {
    const Snippet &snippet = problem.snippets[s];
    for (int source : snippet.contexts) {
      const Twist xi = params.twist(pair++);
      report.pairs.push_back({snippet.target, source, xi, exp_se3(xi).pose});
    }
    report.depth_frames.push_back(snippet.target);
    report.depths.push_back(
        realize_depth(params.grid(static_cast<int>(s)), report.width, report.height, problem.disparity).depth);
  }
}

}  // namespace

Regridded regrid(const CalibProblem &problem, const ParamVector &params, int rows, int cols) {
  if (!(params.layout == problem.layout)) throw ShapeError("parameters do not match the problem layout");
  if (rows < 2 || cols < 2) throw ProblemError("depth grid needs at least 2x2 cells");
  Regridded out{problem, ParamVector()};
  out.problem.layout.grid_rows = rows;
  out.problem.layout.grid_cols = cols;
  out.params = ParamVector(out.problem.layout);
  out.params.set_intrinsics(params.intrinsics());
  for (int pair = 0; pair < params.layout.num_pairs; ++pair) out.params.set_twist(pair, params.twist(pair));
  const int w = problem.full_width();
  const int h = problem.full_height();
  for (int t = 0; t < params.layout.num_targets; ++t) {
    const DepthMap depth = realize_depth(params.grid(t), w, h, problem.disparity).depth;
    out.params.set_grid(t, grid_from_depth(depth, rows, cols, problem.disparity));
  }
  return out;
}

namespace {

/// Runs one coarse-to-fine pass; false when it stopped on divergence.
bool run_pass(const CalibProblem &problem, ParamVector &current, const std::vector<AdamConfig> &schedule, int stage,
              CalibReport &report) {
  for (int level = problem.level_count() - 1; level >= 0; --level) {
    check_scale_equivariance(current.intrinsics(), report.width, report.height, level);
    const CalibProblem sub = problem.at_level(level);
    LevelRecord record;
    record.stage = stage;
    record.level = level;
    record.width = sub.pyramids.front()[level].width();
    record.height = sub.pyramids.front()[level].height();
    try {
      OptimizationResult result = run_optimization(sub, current, schedule[level]);
      current = std::move(result.best);
      record.history = std::move(result.history);
      record.stop_reason = result.stop_reason;
      record.iterations = result.iterations;
    } catch (const DivergenceError &e) {
      record.stop_reason = StopReason::kDiverged;
      record.iterations = e.iteration() + 1;
      report.levels.push_back(std::move(record));
      report.stop_reason = StopReason::kDiverged;
      report.error = CalibError{level, e.iteration(), e.what()};
      return false;
    }
    report.stop_reason = record.stop_reason;
    report.levels.push_back(std::move(record));
  }
  return true;
}

void check_schedule(const CalibProblem &problem, const std::vector<AdamConfig> &schedule) {
  if (schedule.empty()) throw ProblemError("calibration schedule is empty");
  if (static_cast<int>(schedule.size()) != problem.level_count()) {
    throw ProblemError("schedule has " + std::to_string(schedule.size()) + " entries for " +
                       std::to_string(problem.level_count()) + " pyramid levels");
  }
  for (const AdamConfig &cfg : schedule) cfg.validate();
}

}  // namespace

CalibReport calibrate(const CalibProblem &problem, const ParamVector &init, const std::vector<AdamConfig> &schedule) {
  return calibrate(problem, init, schedule, {});
}

CalibReport calibrate(const CalibProblem &problem, const ParamVector &init, const std::vector<AdamConfig> &schedule,
                      const std::vector<RefineStage> &refinements) {
  const auto start = std::chrono::steady_clock::now();
  problem.validate();
  check_schedule(problem, schedule);
  for (const RefineStage &stage : refinements) {
    if (stage.grid_rows < 2 || stage.grid_cols < 2) throw ProblemError("depth grid needs at least 2x2 cells");
    check_schedule(problem, stage.schedule);
  }
  if (!(init.layout == problem.layout)) throw ShapeError("initial parameters do not match the problem layout");

  CalibReport report;
  report.width = problem.full_width();
  report.height = problem.full_height();
  report.initial_objective = total_objective(problem.at_level(0), init);
  report.stop_reason = StopReason::kIterationLimit;

  CalibProblem current_problem = problem;
  ParamVector current = init;
  bool ok = run_pass(current_problem, current, schedule, 0, report);
  for (std::size_t k = 0; ok && k < refinements.size(); ++k) {
    Regridded next = regrid(current_problem, current, refinements[k].grid_rows, refinements[k].grid_cols);
    current_problem = std::move(next.problem);
    current = std::move(next.params);
    ok = run_pass(current_problem, current, refinements[k].schedule, static_cast<int>(k) + 1, report);
  }

  fill_outputs(report, current_problem, current);
  report.final_objective = total_objective(current_problem.at_level(0), current);
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double direction_angle(const Eigen::Vector3d &a, const Eigen::Vector3d &b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return 0.5 * M_PI;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

TruthComparison compare_to_truth(const CalibReport &report, const GroundTruth &truth, bool median_scaling) {
  if (report.width != truth.width || report.height != truth.height) {
    throw ShapeError("report resolution " + std::to_string(report.width) + "x" + std::to_string(report.height) +
                     " differs from ground truth " + std::to_string(truth.width) + "x" + std::to_string(truth.height));
  }
  const IntrinsicMatrix gt = realize_intrinsics(truth.intrinsics, truth.width, truth.height).K;
  const IntrinsicMatrix est = realize_intrinsics(report.intrinsics, report.width, report.height).K;
  TruthComparison c;
  c.fx_rel_error = std::abs(est.fx - gt.fx) / gt.fx;
  c.fy_rel_error = std::abs(est.fy - gt.fy) / gt.fy;
  c.cx_n_error = std::abs(report.intrinsics.cx_n - truth.intrinsics.cx_n);
  c.cy_n_error = std::abs(report.intrinsics.cy_n - truth.intrinsics.cy_n);
  for (const PairRecord &pair : report.pairs) {
    if (pair.target >= static_cast<int>(truth.poses.size()) || pair.source >= static_cast<int>(truth.poses.size())) {
      throw ShapeError("report references a frame the ground truth does not have");
    }
    const Pose gt_rel = relative_pose(truth, pair.target, pair.source);
    c.pairs.push_back({pair.target, pair.source, rotation_angle_between(pair.pose.R, gt_rel.R),
                       direction_angle(pair.pose.t, gt_rel.t)});
  }
  for (std::size_t i = 0; i < report.depths.size() && i < report.depth_frames.size(); ++i) {
    const int frame = report.depth_frames[i];
    if (frame < 0 || frame >= static_cast<int>(truth.depths.size())) continue;
    c.depths.push_back({frame, depth_metrics(report.depths[i], truth.depths[frame], DepthClamp{}, median_scaling)});
  }
  return c;
}

}  // namespace selfcal
