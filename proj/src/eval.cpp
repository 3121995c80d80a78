#include "selfcal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfcal/errors.hpp"

namespace selfcal {
namespace {

void check_inputs(const DepthMap &pred, const DepthMap &gt, std::span<const std::uint8_t> mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ShapeError("prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
                     " differs from ground truth " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  if (mask.size() != gt.size()) throw ShapeError("mask size differs from the depth maps");
  bool any = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    any = true;
    if (!(gt[i] > 0.0) || !std::isfinite(gt[i])) {
      throw DomainError("ground-truth depth at index " + std::to_string(i) + " is not positive");
    }
    if (!(pred[i] > 0.0) || !std::isfinite(pred[i])) {
      throw DomainError("predicted depth at index " + std::to_string(i) + " is not positive");
    }
  }
  if (!any) throw EmptyMaskError();
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw EmptyMaskError();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

ScaledDepth median_scale(const DepthMap &pred, const DepthMap &gt, std::span<const std::uint8_t> mask) {
  check_inputs(pred, gt, mask);
  std::vector<double> p;
  std::vector<double> g;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    p.push_back(pred[i]);
    g.push_back(gt[i]);
  }
  ScaledDepth out;
  out.scale = median(std::move(g)) / median(std::move(p));
  std::vector<double> scaled(pred.data().begin(), pred.data().end());
  for (double &d : scaled) d *= out.scale;
  out.depth = DepthMap(pred.width(), pred.height(), std::move(scaled));
  return out;
}

DepthMetrics depth_metrics(const DepthMap &pred, const DepthMap &gt, std::span<const std::uint8_t> mask,
                           DepthClamp clamp, bool apply_median_scaling) {
  check_inputs(pred, gt, mask);
  if (!(clamp.min > 0.0 && clamp.max >= clamp.min)) throw DomainError("depth clamp must satisfy 0 < min <= max");
  const double scale = apply_median_scaling ? median_scale(pred, gt, mask).scale : 1.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double sq = 0.0;
  double sq_log = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double p = std::clamp(pred[i] * scale, clamp.min, clamp.max);
    const double g = gt[i];
    const double diff = p - g;
    abs_rel += std::abs(diff) / g;
    sq_rel += diff * diff / g;
    sq += diff * diff;
    const double dlog = std::log(p) - std::log(g);
    sq_log += dlog * dlog;
    ++n;
  }
  const double inv = 1.0 / static_cast<double>(n);
  return {abs_rel * inv, sq_rel * inv, std::sqrt(sq * inv), std::sqrt(sq_log * inv)};
}

DepthMetrics depth_metrics(const DepthMap &pred, const DepthMap &gt, DepthClamp clamp, bool apply_median_scaling) {
  const std::vector<std::uint8_t> all(gt.size(), 1);
  return depth_metrics(pred, gt, all, clamp, apply_median_scaling);
}

}  // namespace selfcal
