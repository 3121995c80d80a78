#pragma once

#include <array>
#include <cstdint>

#include "selfcal/problem.hpp"

namespace selfcal {

/// A small random problem whose objective is smooth around `params`.
struct GradcheckCase {
  CalibProblem problem;
  ParamVector params;
  /// Closest distance of any warp coordinate to an integer pixel position.
  double min_integer_distance = 0.0;
};

/**
 * Three frames, one snippet, two pyramid levels. Textures are smooth and the
 * target is brighter than both sources everywhere, so the L1 term never
 * switches sign; warp offsets are kept away from integer pixel positions so
 * bilinear sampling never crosses a cell boundary under small perturbations.
 */
GradcheckCase make_gradcheck_case(std::uint64_t seed, int width = 64, int height = 48);

struct GradcheckResult {
  /// Worst component-wise relative error per group, indexed by ParamGroup.
  std::array<double, 3> worst{};
  /// Number of components compared per group.
  std::array<int, 3> compared{};

  double overall() const;
};

/// Relative error |a - b| / max(|a|, |b|); components where both are below `floor` count as exact.
double relative_error(double a, double b, double floor = 1e-8);

/// Analytic gradient vs central differences with step `eps`. Throws DomainError for eps <= 0.
GradcheckResult check_gradient(const CalibProblem &problem, const ParamVector &params, double eps);

}  // namespace selfcal
