#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "selfcal/problem.hpp"

namespace selfcal {

/// Learning-rate multipliers per parameter group. A zero freezes the group.
struct GroupScales {
  double intrinsics = 1.0;
  double twists = 1.0;
  double depth = 5.0;

  double of(ParamGroup group) const;
};

/**
 * Adam settings. The default step size of 1e-3 suits directly optimized,
 * normalized parameters; 1e-4 is the rate used when these quantities come out
 * of trained networks and can be selected here.
 */
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int max_iters = 400;
  /// Stop when the gradient max-norm (over non-frozen parameters) falls to this value.
  double grad_tol = 1e-7;
  GroupScales lr_scale;
  /// Step size at the last iteration as a fraction of `lr`; the rate decays
  /// geometrically in between. 1 keeps it constant.
  double final_lr_fraction = 1.0;

  /// Step size used at iteration `it` (0-based).
  double lr_at(int it) const;
  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

/// Bias-corrected Adam update; group multipliers come from the layout. Throws ShapeError.
void adam_step(AdamState &state, ParamVector &params, const ParamGradient &grad, const AdamConfig &cfg);

enum class StopReason { kConverged, kIterationLimit, kDiverged };
const char *to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string &name);

struct OptimizationResult {
  /// Lowest-objective iterate visited (the initial point when no iteration ran).
  ParamVector best;
  std::optional<double> best_objective;
  /// Objective of the iterate evaluated at each iteration.
  std::vector<double> history;
  StopReason stop_reason = StopReason::kIterationLimit;
  int iterations = 0;
};

using ObjectiveFunction = std::function<double(const ParamVector &, ParamGradient &)>;

/// Adam loop over an arbitrary objective. Throws DivergenceError on non-finite values.
OptimizationResult run_adam(const ObjectiveFunction &objective, const ParamVector &init, const AdamConfig &cfg);

/// Adam on the calibration objective of `problem`. Iterates that leave the
/// parameter domain or lose every valid pixel raise DivergenceError too.
OptimizationResult run_optimization(const CalibProblem &problem, const ParamVector &init, const AdamConfig &cfg);

}  // namespace selfcal
