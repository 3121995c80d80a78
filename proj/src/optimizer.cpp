#include "selfcal/optimizer.hpp"

#include <cmath>

#include "selfcal/errors.hpp"
#include "selfcal/objective.hpp"

namespace selfcal {

double GroupScales::of(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kIntrinsics:
      return intrinsics;
    case ParamGroup::kTwists:
      return twists;
    case ParamGroup::kDepth:
      return depth;
  }
  return 0.0;
}

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw DomainError("Adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw DomainError("Adam eps must be positive");
  if (max_iters < 0) throw DomainError("max_iters must be non-negative");
  if (!(grad_tol >= 0.0)) throw DomainError("grad_tol must be non-negative");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) throw DomainError("final_lr_fraction must lie in (0, 1]");
  if (!(lr_scale.intrinsics >= 0.0 && lr_scale.twists >= 0.0 && lr_scale.depth >= 0.0)) {
    throw DomainError("learning-rate scales must be non-negative");
  }
}

double AdamConfig::lr_at(int it) const {
  if (final_lr_fraction == 1.0 || max_iters <= 1) return lr;
  return lr * std::pow(final_lr_fraction, static_cast<double>(it) / (max_iters - 1));
}

const char *to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kConverged:
      return "converged";
    case StopReason::kIterationLimit:
      return "iteration_limit";
    case StopReason::kDiverged:
      return "diverged";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string &name) {
  if (name == "converged") return StopReason::kConverged;
  if (name == "iteration_limit") return StopReason::kIterationLimit;
  if (name == "diverged") return StopReason::kDiverged;
  throw FormatError("unknown stop reason '" + name + "'");
}

void adam_step(AdamState &state, ParamVector &params, const ParamGradient &grad, const AdamConfig &cfg) {
  const std::size_t n = params.values.size();
  if (grad.values.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ShapeError("Adam state, parameters and gradient differ in length");
  }
  ++state.t;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const std::array<double, 3> group_lr = {cfg.lr * cfg.lr_scale.intrinsics, cfg.lr * cfg.lr_scale.twists,
                                          cfg.lr * cfg.lr_scale.depth};
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.values[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double lr = group_lr[static_cast<int>(params.layout.group_of(i))];
    if (lr == 0.0) continue;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    params.values[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

namespace {

double max_abs_free(const ParamGradient &g, const GroupScales &scales) {
  double worst = 0.0;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (scales.of(g.layout.group_of(i)) == 0.0) continue;
    worst = std::max(worst, std::abs(g.values[i]));
  }
  return worst;
}

bool all_finite(const std::vector<double> &v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

OptimizationResult run_adam(const ObjectiveFunction &objective, const ParamVector &init, const AdamConfig &cfg) {
  cfg.validate();
  init.check();
  OptimizationResult result;
  result.best = init;
  result.history.reserve(static_cast<std::size_t>(cfg.max_iters));

  ParamVector x = init;
  AdamState state = AdamState::zeros(x.values.size());
  ParamGradient g(x.layout);
  AdamConfig step = cfg;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const double f = objective(x, g);
    if (!std::isfinite(f) || !all_finite(g.values)) throw DivergenceError(it);
    result.history.push_back(f);
    result.iterations = it + 1;
    if (!result.best_objective || f < *result.best_objective) {
      result.best_objective = f;
      result.best = x;
    }
    if (max_abs_free(g, cfg.lr_scale) <= cfg.grad_tol) {
      result.stop_reason = StopReason::kConverged;
      return result;
    }
    step.lr = cfg.lr_at(it);
    adam_step(state, x, g, step);
  }
  result.stop_reason = StopReason::kIterationLimit;
  return result;
}

OptimizationResult run_optimization(const CalibProblem &problem, const ParamVector &init, const AdamConfig &cfg) {
  int calls = 0;
  return run_adam(
      [&problem, &calls](const ParamVector &x, ParamGradient &g) {
        const int it = calls++;
        try {
          ObjectiveValue v = evaluate(problem, x);
          g = std::move(v.gradient);
          return v.value;
        } catch (const DomainError &) {
          // An iterate that left the parameter domain (rotation past pi) or
          // lost every valid pixel has diverged; a bad initial point has not.
          if (it == 0) throw;
          throw DivergenceError(it);
        } catch (const EmptyMaskError &) {
          if (it == 0) throw;
          throw DivergenceError(it);
        }
      },
      init, cfg);
}

}  // namespace selfcal
