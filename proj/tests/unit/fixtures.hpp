#pragma once

#include <cstdint>
#include <vector>

#include "selfcal/problem.hpp"
#include "selfcal/scene.hpp"

namespace fixtures {

struct SyntheticCase {
  selfcal::Sequence seq;
  std::vector<selfcal::Twist> trajectory;
  selfcal::InitializedProblem init;
  /// Ground-truth intrinsics, twists and full-resolution depth grids.
  selfcal::ParamVector truth;
};

/// Twist of the (target -> source) pair for adjacent frames of a trajectory.
inline selfcal::Twist pair_twist(const std::vector<selfcal::Twist> &traj, int target, int source) {
  if (source == target + 1) return traj[target];
  const selfcal::Twist &xi = traj[source];
  return {-xi.omega, -xi.vel};
}

/// Three-plane sequence with the problem built on grids that reproduce the rendered depth exactly.
inline SyntheticCase synthetic_case(std::uint64_t seed, int width, int height, int frames, int levels) {
  using namespace selfcal;
  SyntheticCase c;
  c.trajectory = default_trajectory(frames, seed);
  c.seq = generate_sequence(three_plane_scene(width, height, seed, 1), default_synthetic_intrinsics(), c.trajectory,
                            frames);
  EngineConfig cfg;
  cfg.pyramid_levels = levels;
  cfg.grid_rows = height;
  cfg.grid_cols = width;
  cfg.intrinsics_init = c.seq.truth.intrinsics;
  c.init = init_problem(c.seq.frames, cfg);
  c.truth = c.init.params;
  int pair = 0;
  for (std::size_t s = 0; s < c.init.problem.snippets.size(); ++s) {
    const Snippet &snip = c.init.problem.snippets[s];
    for (int src : snip.contexts) c.truth.set_twist(pair++, pair_twist(c.trajectory, snip.target, src));
    c.truth.set_grid(static_cast<int>(s), grid_from_depth(c.seq.truth.depths[snip.target], height, width, cfg.disparity));
  }
  return c;
}

/// Identical frames: the zero-twist point reconstructs every target exactly.
inline selfcal::InitializedProblem static_problem(std::uint64_t seed, int width, int height, int levels) {
  using namespace selfcal;
  const Sequence seq = generate_sequence(three_plane_scene(width, height, seed, 1), default_synthetic_intrinsics(),
                                         std::vector<Twist>(2), 3);
  EngineConfig cfg;
  cfg.pyramid_levels = levels;
  cfg.grid_rows = 4;
  cfg.grid_cols = 5;
  return init_problem(seq.frames, cfg);
}

}  // namespace fixtures
