#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfcal/engine.hpp"
#include "selfcal/eval.hpp"
#include "selfcal/optimizer.hpp"
#include "selfcal/problem.hpp"
#include "selfcal/scene.hpp"

namespace selfcal {

using Json = nlohmann::json;

/// Schema version written into and required from every JSON document.
inline constexpr const char *kFormatVersion = "1";

struct ManifestTruth {
  IntrinsicParams intrinsics;
  /// World-to-camera pose per frame.
  std::vector<Pose> poses;
  std::vector<std::string> depths;
};

struct Manifest {
  std::string version = kFormatVersion;
  int width = 0;
  int height = 0;
  /// Frame paths, relative to the manifest directory unless absolute.
  std::vector<std::string> frames;
  std::optional<ManifestTruth> truth;
  /// Directory relative paths are resolved against (not serialized).
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string &path) const;
};

Json to_json(const Manifest &manifest);
/// Throws FormatError on schema violations (fewer than 3 frames, unknown version, ...).
Manifest manifest_from_json(const Json &doc, const std::filesystem::path &base_dir = {});
/// Reads and validates a manifest; every referenced file must exist.
Manifest load_manifest(const std::filesystem::path &path);

/// Loads the frames and checks them against the declared dimensions.
std::vector<Image> load_frames(const Manifest &manifest);
/// Throws FormatError when the manifest has no ground-truth block.
GroundTruth load_truth(const Manifest &manifest);

struct RunConfig {
  EngineConfig engine;
  /// One Adam configuration per pyramid level, index = level.
  std::vector<AdamConfig> schedule = std::vector<AdamConfig>(4);
  /// Passes on finer depth grids after the first one; none by default.
  std::vector<RefineStage> refine;
  bool median_scaling = true;
  std::uint64_t seed = 0;

  void validate() const;
};

Json to_json(const RunConfig &config);
/**
 * Every key is optional. "adam" sets the base for all levels and entries of
 * "levels" override it per level; each "refine" entry has a "grid" and its own
 * "adam"/"levels" pair built the same way. Unknown keys are rejected with FormatError.
 */
RunConfig run_config_from_json(const Json &doc);

Json to_json(const DepthMetrics &metrics);
DepthMetrics depth_metrics_from_json(const Json &doc);
/// { "abs_rel": "Abs Rel", ... }
Json metric_columns_json();

Json to_json(const TruthComparison &comparison);
TruthComparison comparison_from_json(const Json &doc);

/// Report document; predicted depth maps are referenced through `depth_files`.
Json to_json(const CalibReport &report);
CalibReport report_from_json(const Json &doc);

Json read_json(const std::filesystem::path &path);
/// Two-space indented JSON followed by a newline.
void write_json(const std::filesystem::path &path, const Json &doc);
std::string dump_json(const Json &doc);

}  // namespace selfcal
