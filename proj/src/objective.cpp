#include "selfcal/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfcal/errors.hpp"

namespace selfcal {

void PhotometricConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("photometric alpha must lie in [0, 1]");
  if (!(ssim_c1 > 0.0 && ssim_c2 > 0.0)) throw DomainError("SSIM constants must be positive");
  if (!(smoothness_weight >= 0.0) || !std::isfinite(smoothness_weight)) {
    throw DomainError("smoothness weight must be finite and non-negative");
  }
}

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_pair(const Image &a, const Image &b, const Mask &mask) {
  if (!a.same_shape(b)) throw ShapeError("images differ in shape");
  if (mask.size() != a.pixel_count()) throw ShapeError("mask size does not match image");
}

std::size_t count_valid(const Mask &mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

}  // namespace

LossResult l1_loss(const Image &a, const Image &b, const Mask &mask) {
  check_pair(a, b, mask);
  const std::size_t n = count_valid(mask);
  if (n == 0) throw EmptyMaskError();
  const int nc = a.channels();
  const double norm = 1.0 / (static_cast<double>(n) * nc);
  LossResult out;
  out.d_synth.assign(b.data().size(), 0.0);
  double sum = 0.0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    for (int c = 0; c < nc; ++c) {
      const std::size_t i = p * nc + c;
      const double diff = b.data()[i] - a.data()[i];
      sum += std::abs(diff);
      out.d_synth[i] = norm * sign_of(diff);
    }
  }
  out.value = sum * norm;
  return out;
}

SsimMap ssim_map(const Image &a, const Image &b, double c1, double c2) {
  if (!a.same_shape(b)) throw ShapeError("SSIM images differ in shape");
  if (a.width() < 3 || a.height() < 3) throw ShapeError("SSIM needs images of at least 3x3");
  const int w = a.width();
  const int h = a.height();
  const int nc = a.channels();
  SsimMap m;
  m.width = w;
  m.height = h;
  m.channels = nc;
  const std::size_t n = a.data().size();
  m.value.resize(n);
  m.d_mean_b.resize(n);
  m.d_mean_bb.resize(n);
  m.d_mean_ab.resize(n);

  constexpr double kNinth = 1.0 / 9.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < nc; ++c) {
        double va[9], vb[9];
        double sa = 0.0, sb = 0.0;
        for (int k = 0; k < 9; ++k) {
          const int yy = std::clamp(y + k / 3 - 1, 0, h - 1);
          const int xx = std::clamp(x + k % 3 - 1, 0, w - 1);
          va[k] = a.at(xx, yy, c);
          vb[k] = b.at(xx, yy, c);
          sa += va[k];
          sb += vb[k];
        }
        const double mu_a = sa * kNinth;
        const double mu_b = sb * kNinth;
        // Centered second moments; E[x^2] - E[x]^2 cancels badly on smooth textures.
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int k = 0; k < 9; ++k) {
          const double da = va[k] - mu_a;
          const double db = vb[k] - mu_b;
          saa += da * da;
          sbb += db * db;
          sab += da * db;
        }
        const double var_a = saa * kNinth;
        const double var_b = sbb * kNinth;
        const double cov = sab * kNinth;

        const double n1 = 2.0 * mu_a * mu_b + c1;
        const double n2 = 2.0 * cov + c2;
        const double d1 = mu_a * mu_a + mu_b * mu_b + c1;
        const double d2 = var_a + var_b + c2;
        const double ssim = n1 * n2 / (d1 * d2);

        // Partials w.r.t. mean(b), mean(b^2), mean(ab) treated as independent statistics.
        const double dn1 = 2.0 * mu_a;
        const double dn2 = -2.0 * mu_a;
        const double dd1 = 2.0 * mu_b;
        const double dd2 = -2.0 * mu_b;
        const std::size_t i = a.index(x, y, c);
        m.value[i] = ssim;
        m.d_mean_b[i] = (dn1 * n2 + n1 * dn2) / (d1 * d2) - ssim * (dd1 / d1 + dd2 / d2);
        m.d_mean_bb[i] = -ssim / d2;
        m.d_mean_ab[i] = 2.0 * n1 / (d1 * d2);
      }
    }
  }
  return m;
}

std::vector<double> SsimMap::backward(std::span<const double> upstream, const Image &a, const Image &b) const {
  std::vector<double> grad(value.size(), 0.0);
  constexpr double kNinth = 1.0 / 9.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = b.index(x, y, c);
        const double up = upstream[i];
        if (up == 0.0) continue;
        const double g_mean = up * d_mean_b[i] * kNinth;
        const double g_bb = up * d_mean_bb[i] * kNinth * 2.0;
        const double g_ab = up * d_mean_ab[i] * kNinth;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, height - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = std::clamp(x + dx, 0, width - 1);
            const std::size_t q = b.index(xx, yy, c);
            grad[q] += g_mean + g_bb * b.data()[q] + g_ab * a.data()[q];
          }
        }
      }
    }
  }
  return grad;
}

PhotometricErrorMap photometric_error_map(const Image &target, const Image &synth, const Mask &mask,
                                          const PhotometricConfig &cfg) {
  check_pair(target, synth, mask);
  PhotometricErrorMap m;
  const int nc = target.channels();
  const std::size_t np = target.pixel_count();
  m.mask = mask;
  m.filled = synth;
  for (std::size_t p = 0; p < np; ++p) {
    if (mask[p]) continue;
    for (int c = 0; c < nc; ++c) m.filled.data()[p * nc + c] = target.data()[p * nc + c];
  }
  m.error.assign(np, 0.0);
  const bool with_ssim = cfg.alpha > 0.0;
  if (with_ssim) m.ssim = ssim_map(target, m.filled, cfg.ssim_c1, cfg.ssim_c2);
  const double inv_c = 1.0 / nc;
  for (std::size_t p = 0; p < np; ++p) {
    double e = 0.0;
    for (int c = 0; c < nc; ++c) {
      const std::size_t i = p * nc + c;
      const double l1 = std::abs(target.data()[i] - m.filled.data()[i]);
      const double s = with_ssim ? 0.5 * cfg.alpha * (1.0 - m.ssim.value[i]) : 0.0;
      e += s + (1.0 - cfg.alpha) * l1;
    }
    m.error[p] = e * inv_c;
  }
  return m;
}

std::vector<double> PhotometricErrorMap::backward(std::span<const double> weights, const Image &target,
                                                  const PhotometricConfig &cfg) const {
  const int nc = target.channels();
  const double inv_c = 1.0 / nc;
  std::vector<double> grad(filled.data().size(), 0.0);
  if (cfg.alpha > 0.0) {
    std::vector<double> upstream(filled.data().size());
    for (std::size_t p = 0; p < weights.size(); ++p) {
      for (int c = 0; c < nc; ++c) upstream[p * nc + c] = -0.5 * cfg.alpha * inv_c * weights[p];
    }
    grad = ssim.backward(upstream, target, filled);
  }
  const double l1_weight = (1.0 - cfg.alpha) * inv_c;
  for (std::size_t p = 0; p < weights.size(); ++p) {
    if (!mask[p]) {
      for (int c = 0; c < nc; ++c) grad[p * nc + c] = 0.0;
      continue;
    }
    if (weights[p] == 0.0) continue;
    for (int c = 0; c < nc; ++c) {
      const std::size_t i = p * nc + c;
      grad[i] += weights[p] * l1_weight * sign_of(filled.data()[i] - target.data()[i]);
    }
  }
  return grad;
}

LossResult photometric_loss(const Image &target, const Image &synth, const Mask &mask, const PhotometricConfig &cfg) {
  check_pair(target, synth, mask);
  const std::size_t n = count_valid(mask);
  if (n == 0) throw EmptyMaskError();
  const PhotometricErrorMap m = photometric_error_map(target, synth, mask, cfg);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> weights(mask.size(), 0.0);
  long double sum = 0.0L;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    sum += m.error[p];
    weights[p] = inv_n;
  }
  LossResult out;
  out.value = static_cast<double>(sum) * inv_n;
  out.d_synth = m.backward(weights, target, cfg);
  return out;
}

SmoothnessResult smoothness_loss(std::span<const double> disparity, const Image &guide) {
  const int w = guide.width();
  const int h = guide.height();
  if (disparity.size() != guide.pixel_count()) throw ShapeError("disparity and guide image differ in size");
  const std::size_t n = disparity.size();
  const int nc = guide.channels();

  const double mean = std::accumulate(disparity.begin(), disparity.end(), 0.0) / static_cast<double>(n);
  if (!(mean > 0.0)) throw DomainError("smoothness needs positive mean disparity");
  const double inv_mean = 1.0 / mean;

  auto edge_weight = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < nc; ++c) g += std::abs(guide.at(x1, y1, c) - guide.at(x0, y0, c));
    return std::exp(-g / nc);
  };

  // Gradient w.r.t. the normalized disparity first, then through the normalization.
  std::vector<double> g_norm(n, 0.0);
  double value = 0.0;
  if (w > 1) {
    const double inv_count = 1.0 / (static_cast<double>(w - 1) * h);
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x + 1 < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double diff = (disparity[i + 1] - disparity[i]) * inv_mean;
        const double wgt = edge_weight(x, y, x + 1, y);
        sum += std::abs(diff) * wgt;
        const double g = sign_of(diff) * wgt * inv_count;
        g_norm[i + 1] += g;
        g_norm[i] -= g;
      }
    }
    value += sum * inv_count;
  }
  if (h > 1) {
    const double inv_count = 1.0 / (static_cast<double>(h - 1) * w);
    double sum = 0.0;
    for (int y = 0; y + 1 < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double diff = (disparity[i + w] - disparity[i]) * inv_mean;
        const double wgt = edge_weight(x, y, x, y + 1);
        sum += std::abs(diff) * wgt;
        const double g = sign_of(diff) * wgt * inv_count;
        g_norm[i + w] += g;
        g_norm[i] -= g;
      }
    }
    value += sum * inv_count;
  }

  SmoothnessResult out;
  out.value = value;
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += g_norm[i] * disparity[i];
  const double correction = dot * inv_mean * inv_mean / static_cast<double>(n);
  out.d_disparity.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.d_disparity[i] = g_norm[i] * inv_mean - correction;
  return out;
}

namespace {

/// Contribution of one snippet; gradient entries only for the snippet's own parameters
/// plus the shared intrinsics.
struct SnippetTerm {
  double value = 0.0;
  std::array<double, IntrinsicParams::kSize> d_intrinsics{};
};

SnippetTerm evaluate_snippet(const CalibProblem &problem, const ParamVector &params, int s,
                             ParamGradient *grad) {
  const Snippet &snippet = problem.snippets[s];
  const int first_pair = problem.first_pair(s);
  const IntrinsicParams intr = params.intrinsics();
  const InvDepthGrid grid = params.grid(s);
  const PhotometricConfig &cfg = problem.photometric;
  const std::size_t n_ctx = snippet.contexts.size();

  std::vector<TwistPose> poses;
  poses.reserve(n_ctx);
  for (std::size_t k = 0; k < n_ctx; ++k) poses.push_back(exp_se3(params.twist(first_pair + static_cast<int>(k))));

  SnippetTerm term;
  for (int level = problem.last_level; level >= problem.first_level; --level) {
    const double level_weight = std::ldexp(1.0, -level);
    const Image &target = problem.pyramids[snippet.target][level];
    const int w = target.width();
    const int h = target.height();
    const int nc = target.channels();
    const std::size_t np = target.pixel_count();

    const RealizedIntrinsics K = level_intrinsics(intr, problem.full_width(), problem.full_height(), level);
    const RealizedDepth depth = realize_depth(grid, w, h, problem.disparity,
                                              GridMapping::for_level(problem.full_width(), problem.full_height(),
                                                                     level, grid.rows, grid.cols));

    std::vector<WarpField> fields;
    std::vector<SynthesizedView> views;
    std::vector<PhotometricErrorMap> errors;
    fields.reserve(n_ctx);
    views.reserve(n_ctx);
    errors.reserve(n_ctx);
    for (std::size_t k = 0; k < n_ctx; ++k) {
      fields.push_back(warp_coordinates(depth.depth, K, poses[k]));
      views.push_back(synthesize_view(problem.pyramids[snippet.contexts[k]][level], fields.back()));
      errors.push_back(photometric_error_map(target, views.back().image, views.back().mask, cfg));
    }

    // Per-context pixel weights of the photometric term.
    std::vector<std::vector<double>> weights(n_ctx, std::vector<double>(np, 0.0));
    double photometric = 0.0;
    if (cfg.use_min_reprojection) {
      std::vector<int> best(np, -1);
      std::size_t count = 0;
      for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t k = 0; k < n_ctx; ++k) {
          if (!views[k].mask[p]) continue;
          if (best[p] < 0 || errors[k].error[p] < errors[best[p]].error[p]) best[p] = static_cast<int>(k);
        }
        if (best[p] >= 0) ++count;
      }
      if (count == 0) throw EmptyMaskError();
      const double inv = 1.0 / static_cast<double>(count);
      long double sum = 0.0L;
      for (std::size_t p = 0; p < np; ++p) {
        if (best[p] < 0) continue;
        sum += errors[best[p]].error[p];
        weights[best[p]][p] = inv;
      }
      photometric = static_cast<double>(sum) * inv;
    } else {
      for (std::size_t k = 0; k < n_ctx; ++k) {
        const std::size_t count = static_cast<std::size_t>(std::count(views[k].mask.begin(), views[k].mask.end(), 1));
        if (count == 0) throw EmptyMaskError();
        const double inv = 1.0 / (static_cast<double>(count) * n_ctx);
        // Extended accumulator: with ~1e-8 gradient components, double-precision
        // summation noise dominates central differences at the usual step sizes.
        long double sum = 0.0L;
        for (std::size_t p = 0; p < np; ++p) {
          if (!views[k].mask[p]) continue;
          sum += errors[k].error[p];
          weights[k][p] = inv;
        }
        photometric += static_cast<double>(sum) / static_cast<double>(count);
      }
      photometric /= static_cast<double>(n_ctx);
    }

    double smooth_value = 0.0;
    SmoothnessResult smooth;
    if (cfg.smoothness_weight > 0.0) {
      smooth = smoothness_loss(depth.disparity, target);
      smooth_value = smooth.value;
    }
    term.value += level_weight * (photometric + cfg.smoothness_weight * smooth_value);

    if (grad == nullptr) continue;

    std::vector<double> d_depth(np, 0.0);
    for (std::size_t k = 0; k < n_ctx; ++k) {
      const std::vector<double> d_synth =
          errors[k].backward(weights[k], target, cfg);
      const std::size_t twist_at = params.layout.twist_offset(first_pair + static_cast<int>(k));
      Eigen::Matrix<double, 1, 6> g_twist = Eigen::Matrix<double, 1, 6>::Zero();
      Eigen::Matrix<double, 1, 4> g_intr = Eigen::Matrix<double, 1, 4>::Zero();
      for (std::size_t p = 0; p < np; ++p) {
        if (!views[k].mask[p]) continue;
        double g_u = 0.0;
        double g_v = 0.0;
        for (int c = 0; c < nc; ++c) {
          g_u += d_synth[p * nc + c] * views[k].d_du[p * nc + c];
          g_v += d_synth[p * nc + c] * views[k].d_dv[p * nc + c];
        }
        if (g_u == 0.0 && g_v == 0.0) continue;
        const WarpPixel &wp = fields[k].pixels[p];
        g_intr += g_u * wp.d_intrinsics.row(0) + g_v * wp.d_intrinsics.row(1);
        g_twist += g_u * wp.d_twist.row(0) + g_v * wp.d_twist.row(1);
        d_depth[p] += g_u * wp.d_depth.x() + g_v * wp.d_depth.y();
      }
      for (int j = 0; j < IntrinsicParams::kSize; ++j) term.d_intrinsics[j] += level_weight * g_intr(j);
      for (int j = 0; j < Twist::kSize; ++j) grad->values[twist_at + j] += level_weight * g_twist(j);
    }

    const std::size_t grid_at = params.layout.grid_offset(s);
    for (std::size_t p = 0; p < np; ++p) {
      const GridStencil &st = depth.stencils[p];
      double d_disp = 0.0;
      if (cfg.smoothness_weight > 0.0) d_disp = cfg.smoothness_weight * smooth.d_disparity[p];
      for (int j = 0; j < 4; ++j) {
        if (st.weights[j] == 0.0) continue;
        const double g = d_depth[p] * depth.d_depth_d_cell(p, j) +
                         d_disp * depth.d_disparity_d_raw[p] * st.weights[j];
        grad->values[grid_at + st.cells[j]] += level_weight * g;
      }
    }
  }
  return term;
}

/// Snippet indices in canonical (target, contexts) order so that sums do not
/// depend on how the problem lists its snippets.
std::vector<int> canonical_order(const CalibProblem &problem) {
  std::vector<int> order(problem.snippets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Snippet &sa = problem.snippets[a];
    const Snippet &sb = problem.snippets[b];
    if (sa.target != sb.target) return sa.target < sb.target;
    return sa.contexts < sb.contexts;
  });
  return order;
}

double evaluate_impl(const CalibProblem &problem, const ParamVector &params, ParamGradient *grad) {
  problem.validate();
  params.check();
  if (!(params.layout == problem.layout)) throw ShapeError("parameter layout does not match the problem");
  if (grad != nullptr) *grad = ParamGradient(params.layout);

  std::vector<SnippetTerm> terms(problem.snippets.size());
  for (std::size_t s = 0; s < problem.snippets.size(); ++s) {
    terms[s] = evaluate_snippet(problem, params, static_cast<int>(s), grad);
  }
  double total = 0.0;
  for (int s : canonical_order(problem)) {
    total += terms[s].value;
    if (grad != nullptr) {
      for (int j = 0; j < IntrinsicParams::kSize; ++j) grad->values[j] += terms[s].d_intrinsics[j];
    }
  }
  return total;
}

}  // namespace

double total_objective(const CalibProblem &problem, const ParamVector &params) {
  return evaluate_impl(problem, params, nullptr);
}

ParamGradient gradient(const CalibProblem &problem, const ParamVector &params) {
  ParamGradient g;
  evaluate_impl(problem, params, &g);
  return g;
}

ObjectiveValue evaluate(const CalibProblem &problem, const ParamVector &params) {
  ObjectiveValue out;
  out.value = evaluate_impl(problem, params, &out.gradient);
  return out;
}

ParamGradient finite_difference_gradient(const CalibProblem &problem, const ParamVector &params, double eps) {
  if (!(eps > 0.0)) throw DomainError("finite-difference step must be positive");
  ParamGradient g(params.layout);
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double x = params.values[i];
    probe.values[i] = x + eps;
    const double f_plus = total_objective(problem, probe);
    probe.values[i] = x - eps;
    const double f_minus = total_objective(problem, probe);
    probe.values[i] = x;
    g.values[i] = (f_plus - f_minus) / (2.0 * eps);
  }
  return g;
}

std::vector<double> finite_difference_gradient(const std::function<double(std::span<const double>)> &f,
                                               std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw DomainError("finite-difference step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double f_plus = f(probe);
    probe[i] = x[i] - eps;
    const double f_minus = f(probe);
    probe[i] = x[i];
    g[i] = (f_plus - f_minus) / (2.0 * eps);
  }
  return g;
}

}  // namespace selfcal
