#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "selfcal/image.hpp"

namespace selfcal {

struct DepthMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
};

/// Field name and the table column it is reported under.
struct MetricColumn {
  std::string_view key;
  std::string_view column;
};

inline constexpr std::array<MetricColumn, 4> kMetricColumns = {{
    {"abs_rel", "Abs Rel"},
    {"sq_rel", "Sq Rel"},
    {"rmse", "RMSE"},
    {"rmse_log", "RMSE log"},
}};

struct DepthClamp {
  double min = 0.1;
  double max = 100.0;
};

struct ScaledDepth {
  DepthMap depth;
  double scale = 1.0;
};

/// Median of the values (mean of the two middle ones for an even count).
double median(std::vector<double> values);

/**
 * Rescales `pred` by median(gt)/median(pred) over the mask. A mask entry of 0
 * excludes the pixel. Throws EmptyMaskError or DomainError on non-positive depths.
 */
ScaledDepth median_scale(const DepthMap &pred, const DepthMap &gt, std::span<const std::uint8_t> mask);

/// Standard monocular depth errors over masked pixels after optional scaling and clamping.
DepthMetrics depth_metrics(const DepthMap &pred, const DepthMap &gt, std::span<const std::uint8_t> mask,
                           DepthClamp clamp = {}, bool apply_median_scaling = true);

/// Same as above with every pixel selected.
DepthMetrics depth_metrics(const DepthMap &pred, const DepthMap &gt, DepthClamp clamp = {},
                           bool apply_median_scaling = true);

}  // namespace selfcal
