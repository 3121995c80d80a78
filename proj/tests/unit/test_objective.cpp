#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "property.hpp"
#include "selfcal/errors.hpp"
#include "selfcal/gradcheck.hpp"
#include "selfcal/objective.hpp"

using namespace selfcal;

namespace {

Image constant(int w, int h, double v, int c = 1) { return Image(w, h, c, std::vector<double>(std::size_t(w) * h * c, v)); }

Mask full_mask(const Image &img) { return Mask(img.pixel_count(), 1); }

/// Small random multi-snippet problem for order and linearity properties.
struct RandomProblem {
  CalibProblem problem;
  ParamVector params;
};

RandomProblem random_problem(proptest::Gen &g) {
  const int w = g.integer(12, 20), h = g.integer(9, 15);
  const int frames = g.integer(3, 5);
  std::vector<Image> imgs;
  for (int k = 0; k < frames; ++k) {
    Image img(w, h, 1);
    const double a = g.uniform(0.1, 0.4), b = g.uniform(0.1, 0.4), ph = g.uniform(0, 6);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(x, y) = 0.5 + 0.2 * std::sin(a * x + b * y + ph) + 0.05 * g.uniform(-1, 1);
    imgs.push_back(img);
  }
  EngineConfig cfg;
  cfg.pyramid_levels = g.integer(1, 2);
  cfg.grid_rows = g.integer(2, 4);
  cfg.grid_cols = g.integer(2, 4);
  cfg.photometric.smoothness_weight = g.uniform(0.0, 0.1);
  cfg.photometric.use_min_reprojection = g.coin();
  InitializedProblem ip = init_problem(imgs, cfg);
  for (int pr = 0; pr < ip.params.layout.num_pairs; ++pr) ip.params.set_twist(pr, g.twist(0.02, 0.05));
  for (int t = 0; t < ip.params.layout.num_targets; ++t) {
    InvDepthGrid grid = ip.params.grid(t);
    for (double &v : grid.raw) v = g.uniform(-2, 0);
    ip.params.set_grid(t, grid);
  }
  return {ip.problem, ip.params};
}

}  // namespace

TEST(Objective, L1Examples) {
  proptest::Gen g(1);
  const Image a = g.image(4, 3, 3);
  EXPECT_EQ(l1_loss(a, a, full_mask(a)).value, 0.0);
  EXPECT_NEAR(l1_loss(constant(4, 3, 0.2), constant(4, 3, 0.5), full_mask(constant(4, 3, 0))).value, 0.3, 1e-15);

  Image b = constant(4, 2, 0.0);
  Image c = constant(4, 2, 0.0);
  for (int x = 0; x < 4; ++x) c.at(x, 1) = 1.0;
  Mask top(8, 0);
  std::fill(top.begin(), top.begin() + 4, 1);
  EXPECT_EQ(l1_loss(b, c, top).value, 0.0);
  EXPECT_EQ(l1_loss(b, c, full_mask(b)).value, 0.5);
  EXPECT_THROW(l1_loss(b, c, Mask(8, 0)), EmptyMaskError);
  EXPECT_THROW(l1_loss(b, constant(3, 2, 0), full_mask(b)), ShapeError);
}

TEST(Objective, L1SubgradientIsZeroAtEquality) {
  const Image a = constant(3, 3, 0.4);
  const LossResult r = l1_loss(a, a, full_mask(a));
  for (double d : r.d_synth) EXPECT_EQ(d, 0.0);
}

TEST(Objective, SsimExamples) {
  proptest::Gen g(2);
  const Image a = g.image(6, 5, 3);
  const double c1 = 1e-4, c2 = 9e-4;
  for (double v : ssim_map(a, a, c1, c2).value) EXPECT_NEAR(v, 1.0, 1e-15);
  for (double v : ssim_map(constant(5, 5, 0.5), constant(5, 5, 0.5), c1, c2).value) EXPECT_NEAR(v, 1.0, 1e-15);
  const double expected = (2 * 0.2 * 0.8 + c1) / (0.2 * 0.2 + 0.8 * 0.8 + c1);
  for (double v : ssim_map(constant(5, 4, 0.2), constant(5, 4, 0.8), c1, c2).value) EXPECT_NEAR(v, expected, 1e-15);
  EXPECT_THROW(ssim_map(constant(2, 5, 0.1), constant(2, 5, 0.1), c1, c2), ShapeError);
  EXPECT_THROW(ssim_map(constant(3, 3, 0.1), constant(4, 3, 0.1), c1, c2), ShapeError);
}

TEST(Objective, SsimBackwardMatchesFiniteDifferences) {
  proptest::Gen g(3);
  const Image a = g.image(6, 5, 1);
  const Image b = g.image(6, 5, 1);
  std::vector<double> up(a.data().size());
  for (double &u : up) u = g.uniform(-1, 1);
  const SsimMap m = ssim_map(a, b, 1e-4, 9e-4);
  const std::vector<double> grad = m.backward(up, a, b);
  auto f = [&](std::span<const double> x) {
    Image bb(6, 5, 1, std::vector<double>(x.begin(), x.end()));
    const SsimMap s = ssim_map(a, bb, 1e-4, 9e-4);
    return std::inner_product(up.begin(), up.end(), s.value.begin(), 0.0);
  };
  const std::vector<double> fd = finite_difference_gradient(f, b.data(), 1e-6);
  for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_LE(proptest::rel_err_floor(grad[i], fd[i], 1e-3), 1e-6);
}

TEST(Objective, PhotometricExamples) {
  proptest::Gen g(4);
  const Image t = g.image(6, 6, 3);
  const Image s = g.image(6, 6, 3);
  const Mask m = full_mask(t);
  PhotometricConfig cfg;
  EXPECT_EQ(photometric_loss(t, t, m, cfg).value, 0.0);
  cfg.alpha = 0.0;
  EXPECT_DOUBLE_EQ(photometric_loss(t, s, m, cfg).value, l1_loss(t, s, m).value);
  cfg.alpha = 1.0;
  EXPECT_EQ(photometric_loss(t, t, m, cfg).value, 0.0);
  EXPECT_GT(photometric_loss(t, s, m, cfg).value, 0.0);
  EXPECT_THROW(photometric_loss(t, s, Mask(36, 0), cfg), EmptyMaskError);
}

TEST(Objective, PhotometricConfigValidation) {
  PhotometricConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.ssim_c1 = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = {};
  cfg.smoothness_weight = -1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Objective, MaskedPixelsDoNotAffectLossOrGradient) {
  proptest::Gen g(5);
  const Image t = g.image(8, 7, 3);
  Image s = g.image(8, 7, 3);
  Mask m = full_mask(t);
  for (int i = 0; i < 56; i += 3) m[i] = 0;
  PhotometricConfig cfg;
  const LossResult a = photometric_loss(t, s, m, cfg);
  for (int i = 0; i < 56; ++i) {
    if (m[i]) continue;
    for (int c = 0; c < 3; ++c) s.data()[i * 3 + c] = g.uniform(0, 1);
  }
  const LossResult b = photometric_loss(t, s, m, cfg);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.d_synth, b.d_synth);
  for (int i = 0; i < 56; ++i)
    if (!m[i])
      for (int c = 0; c < 3; ++c) EXPECT_EQ(a.d_synth[i * 3 + c], 0.0);
}

TEST(Objective, PhotometricGradientMatchesFiniteDifferences) {
  proptest::Gen g(6);
  const Image t = g.image(7, 6, 1);
  const Image s = g.image(7, 6, 1);
  Mask m = full_mask(t);
  m[3] = m[20] = 0;
  PhotometricConfig cfg;
  const LossResult r = photometric_loss(t, s, m, cfg);
  auto f = [&](std::span<const double> x) {
    return photometric_loss(t, Image(7, 6, 1, std::vector<double>(x.begin(), x.end())), m, cfg).value;
  };
  const std::vector<double> fd = finite_difference_gradient(f, s.data(), 1e-7);
  for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_LE(proptest::rel_err_floor(r.d_synth[i], fd[i], 1e-3), 1e-5);
}

TEST(Objective, SmoothnessExamples) {
  const Image flat = constant(6, 4, 0.5);
  EXPECT_EQ(smoothness_loss(std::vector<double>(24, 0.7), flat).value, 0.0);

  std::vector<double> ramp(24);
  double sum = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) sum += ramp[y * 6 + x] = 1.0 + 0.25 * x;
  const double mean = sum / 24;
  EXPECT_NEAR(smoothness_loss(ramp, flat).value, 0.25 / mean, 1e-14);

  Image edge = flat;
  for (int y = 0; y < 4; ++y)
    for (int x = 3; x < 6; ++x) edge.at(x, y) = 1.0;
  EXPECT_LT(smoothness_loss(ramp, edge).value, smoothness_loss(ramp, flat).value);
  EXPECT_THROW(smoothness_loss(std::vector<double>(5, 1.0), flat), ShapeError);
}

TEST(Objective, SmoothnessGradientMatchesFiniteDifferences) {
  proptest::Gen g(7);
  const Image guide = g.image(5, 4, 3);
  std::vector<double> d(20);
  for (double &v : d) v = g.uniform(0.5, 2.0);
  const SmoothnessResult r = smoothness_loss(d, guide);
  const std::vector<double> fd =
      finite_difference_gradient([&](std::span<const double> x) { return smoothness_loss(x, guide).value; }, d, 1e-7);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LE(proptest::rel_err_floor(r.d_disparity[i], fd[i], 1e-3), 1e-5);
}

TEST(Objective, FiniteDifferenceOfQuadratic) {
  const std::vector<double> x = {3.0};
  const std::vector<double> g =
      finite_difference_gradient([](std::span<const double> v) { return v[0] * v[0]; }, x, 1e-4);
  EXPECT_NEAR(g[0], 6.0, 1e-7);
  EXPECT_THROW(finite_difference_gradient([](std::span<const double> v) { return v[0]; }, x, 0.0), DomainError);
}

TEST(Objective, FiniteDifferenceRejectsZeroStepOnProblems) {
  const InitializedProblem ip = fixtures::static_problem(1, 16, 12, 1);
  EXPECT_THROW(finite_difference_gradient(ip.problem, ip.params, 0.0), DomainError);
}

TEST(Objective, StationaryAtStaticGroundTruth) {
  // Identical frames and zero twists: every synthesized view is its target.
  const InitializedProblem ip = fixtures::static_problem(2, 48, 36, 3);
  const ObjectiveValue v = evaluate(ip.problem, ip.params);
  EXPECT_LE(v.value, 1e-6);
  double norm = 0.0;
  for (double x : v.gradient.values) norm += x * x;
  EXPECT_LE(std::sqrt(norm), 1e-5);
}

TEST(Objective, FocalPerturbationIncreasesObjective) {
  const fixtures::SyntheticCase c = fixtures::synthetic_case(1, 64, 48, 3, 1);
  const double at_truth = total_objective(c.init.problem, c.truth);
  ParamVector off = c.truth;
  IntrinsicParams p = off.intrinsics();
  p.log_fx_n += std::log(1.1);
  off.set_intrinsics(p);
  EXPECT_GT(total_objective(c.init.problem, off), at_truth);
}

TEST(Objective, LayoutMismatchAndEmptyProblemThrow) {
  const InitializedProblem ip = fixtures::static_problem(1, 16, 12, 1);
  ParamLayout other = ip.params.layout;
  other.grid_rows += 1;
  EXPECT_THROW(total_objective(ip.problem, ParamVector(other)), ShapeError);
  CalibProblem empty = ip.problem;
  empty.pyramids.clear();
  EXPECT_THROW(total_objective(empty, ip.params), ProblemError);
}

TEST(Objective, EvaluateMatchesSeparateCalls) {
  proptest::Gen g(8);
  const RandomProblem rp = random_problem(g);
  const ObjectiveValue v = evaluate(rp.problem, rp.params);
  EXPECT_EQ(v.value, total_objective(rp.problem, rp.params));
  EXPECT_EQ(v.gradient.values, gradient(rp.problem, rp.params).values);
  EXPECT_EQ(total_objective(rp.problem, rp.params), total_objective(rp.problem, rp.params));
}

TEST(Objective, GradientMatchesFiniteDifferencesOnTwentyProblems) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const GradcheckCase c = make_gradcheck_case(seed);
    const GradcheckResult r = check_gradient(c.problem, c.params, 1e-4);
    for (int k = 0; k < 3; ++k) {
      EXPECT_GT(r.compared[k], 0);
      EXPECT_LE(r.worst[k], 1e-4) << "seed " << seed << " group " << k;
    }
  }
}

TEST(Objective, MinReprojectionGradientMatchesFiniteDifferences) {
  GradcheckCase c = make_gradcheck_case(1);
  c.problem.photometric.use_min_reprojection = true;
  // A darker second source keeps most pixels away from the kink of the minimum;
  // the smaller step keeps the stencil off the remaining near-ties.
  for (Image &img : c.problem.pyramids[2])
    for (double &v : img.data()) v *= 0.5;
  const GradcheckResult r = check_gradient(c.problem, c.params, 1e-5);
  EXPECT_LE(r.overall(), 1e-4);
}

TEST(ObjectiveProperty, PhotometricLossIsNonNegativeAndZeroOnlyWhenEqual) {
  proptest::for_all("loss sign", [](proptest::Gen &g) {
    const int w = g.integer(3, 9), h = g.integer(3, 9), c = g.coin() ? 3 : 1;
    const Image t = g.image(w, h, c);
    Image s = g.image(w, h, c);
    Mask m(t.pixel_count(), 0);
    for (auto &x : m) x = g.coin();
    m[g.integer(0, int(m.size()) - 1)] = 1;
    PhotometricConfig cfg;
    cfg.alpha = g.coin() ? g.uniform(0.0, 0.999) : 0.85;
    EXPECT_GT(photometric_loss(t, s, m, cfg).value, 0.0);
    // Equal on the mask, arbitrary elsewhere.
    Image same = s;
    for (std::size_t p = 0; p < m.size(); ++p)
      if (m[p])
        for (int k = 0; k < c; ++k) same.data()[p * c + k] = t.data()[p * c + k];
    EXPECT_EQ(photometric_loss(t, same, m, cfg).value, 0.0);
    EXPECT_GE(photometric_loss(t, s, m, cfg).value, 0.0);
  });
}

TEST(ObjectiveProperty, GradientMatchesFiniteDifferences) {
  proptest::for_all("gradcheck", [](proptest::Gen &g) {
    const GradcheckCase c = make_gradcheck_case(g.bits() % 100000 + 21);
    EXPECT_LE(check_gradient(c.problem, c.params, 1e-4).overall(), 1e-4);
  });
}

TEST(ObjectiveProperty, SnippetOrderDoesNotMatter) {
  proptest::for_all("snippet order", [](proptest::Gen &g) {
    const RandomProblem rp = random_problem(g);
    const int n = static_cast<int>(rp.problem.snippets.size());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    if (n > 2) std::swap(perm[0], perm[g.integer(1, n - 1)]);

    CalibProblem shuffled = rp.problem;
    ParamVector params(rp.params.layout);
    params.set_intrinsics(rp.params.intrinsics());
    int pair = 0;
    for (int k = 0; k < n; ++k) {
      const int s = perm[k];
      shuffled.snippets[k] = rp.problem.snippets[s];
      const int first = rp.problem.first_pair(s);
      for (std::size_t c = 0; c < rp.problem.snippets[s].contexts.size(); ++c) {
        params.set_twist(pair++, rp.params.twist(first + static_cast<int>(c)));
      }
      params.set_grid(k, rp.params.grid(s));
    }
    const ObjectiveValue a = evaluate(rp.problem, rp.params);
    const ObjectiveValue b = evaluate(shuffled, params);
    EXPECT_EQ(a.value, b.value);
    for (int j = 0; j < IntrinsicParams::kSize; ++j) EXPECT_EQ(a.gradient.values[j], b.gradient.values[j]);
    for (int k = 0; k < n; ++k) {
      const InvDepthGrid ga = ParamVector{a.gradient}.grid(perm[k]);
      const InvDepthGrid gb = ParamVector{b.gradient}.grid(k);
      EXPECT_EQ(ga.raw, gb.raw);
    }
  });
}

TEST(ObjectiveProperty, SmoothnessWeightEntersLinearly) {
  proptest::for_all("linearity", [](proptest::Gen &g) {
    RandomProblem rp = random_problem(g);
    const double w = g.uniform(0.01, 1.0);
    auto at = [&](double weight) {
      CalibProblem p = rp.problem;
      p.photometric.smoothness_weight = weight;
      return total_objective(p, rp.params);
    };
    const double f0 = at(0.0), f1 = at(w), f2 = at(2 * w);
    EXPECT_NEAR(f2 - f1, f1 - f0, 1e-12 * std::max(1.0, f2));
    EXPECT_GE(f1, f0);
  });
}
