#include "selfcal/io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "selfcal/errors.hpp"

namespace selfcal {
namespace {

void require_object(const Json &j, const std::string &where) {
  if (!j.is_object()) throw FormatError(where + " must be a JSON object");
}

void check_keys(const Json &j, std::initializer_list<const char *> allowed, const std::string &where) {
  require_object(j, where);
  for (const auto &item : j.items()) {
    bool known = false;
    for (const char *key : allowed) known = known || item.key() == key;
    if (!known) throw FormatError("unknown key '" + item.key() + "' in " + where);
  }
}

const Json &field(const Json &j, const char *key, const std::string &where) {
  require_object(j, where);
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(where + " is missing '" + key + "'");
  return *it;
}

/// Numbers; null stands for a non-finite value.
double number(const Json &j, const std::string &where) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw FormatError(where + " must be a number");
  return j.get<double>();
}

Json number_json(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

int integer(const Json &j, const std::string &where) {
  if (!j.is_number_integer()) throw FormatError(where + " must be an integer");
  return j.get<int>();
}

std::string text(const Json &j, const std::string &where) {
  if (!j.is_string()) throw FormatError(where + " must be a string");
  return j.get<std::string>();
}

bool boolean(const Json &j, const std::string &where) {
  if (!j.is_boolean()) throw FormatError(where + " must be a boolean");
  return j.get<bool>();
}

const Json &array(const Json &j, const std::string &where, std::size_t size = 0) {
  if (!j.is_array()) throw FormatError(where + " must be an array");
  if (size != 0 && j.size() != size) throw FormatError(where + " must hold " + std::to_string(size) + " entries");
  return j;
}

void read_double(const Json &j, const char *key, double &out, const std::string &where) {
  if (j.contains(key)) out = number(j.at(key), where + "." + key);
}

void read_int(const Json &j, const char *key, int &out, const std::string &where) {
  if (j.contains(key)) out = integer(j.at(key), where + "." + key);
}

void check_version(const Json &j, const std::string &where, bool required) {
  if (!j.contains("version")) {
    if (required) throw FormatError(where + " has no version");
    return;
  }
  const std::string v = text(j.at("version"), where + ".version");
  if (v != kFormatVersion) throw FormatError(where + " has unsupported version '" + v + "'");
}

Json raw_intrinsics_json(const IntrinsicParams &p) {
  return {{"model", to_string(p.model)},
          {"log_fx_n", p.log_fx_n},
          {"log_fy_n", p.log_fy_n},
          {"cx_n", p.cx_n},
          {"cy_n", p.cy_n}};
}

IntrinsicParams raw_intrinsics_from_json(const Json &j, const std::string &where) {
  check_keys(j, {"model", "log_fx_n", "log_fy_n", "cx_n", "cy_n"}, where);
  IntrinsicParams p;
  if (j.contains("model")) {
    try {
      p.model = camera_model_from_string(text(j.at("model"), where + ".model"));
    } catch (const DomainError &e) {
      throw FormatError(e.what());
    }
  }
  p.log_fx_n = number(field(j, "log_fx_n", where), where + ".log_fx_n");
  p.log_fy_n = number(field(j, "log_fy_n", where), where + ".log_fy_n");
  p.cx_n = number(field(j, "cx_n", where), where + ".cx_n");
  p.cy_n = number(field(j, "cy_n", where), where + ".cy_n");
  return p;
}

Json realized_json(const IntrinsicMatrix &K) { return {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}}; }

IntrinsicMatrix realized_from_json(const Json &j, const std::string &where) {
  check_keys(j, {"fx", "fy", "cx", "cy"}, where);
  IntrinsicMatrix K;
  K.fx = number(field(j, "fx", where), where + ".fx");
  K.fy = number(field(j, "fy", where), where + ".fy");
  K.cx = number(field(j, "cx", where), where + ".cx");
  K.cy = number(field(j, "cy", where), where + ".cy");
  return K;
}

Json vector_json(const Eigen::Vector3d &v) { return Json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vector_from_json(const Json &j, const std::string &where) {
  array(j, where, 3);
  return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

Json pose_json(const Pose &p) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({p.R(r, 0), p.R(r, 1), p.R(r, 2)}));
  return {{"R", rows}, {"t", vector_json(p.t)}};
}

Pose pose_from_json(const Json &j, const std::string &where) {
  check_keys(j, {"R", "t"}, where);
  Pose p;
  const Json &rows = array(field(j, "R", where), where + ".R", 3);
  for (int r = 0; r < 3; ++r) p.R.row(r) = vector_from_json(rows[r], where + ".R").transpose();
  p.t = vector_from_json(field(j, "t", where), where + ".t");
  return p;
}

std::vector<std::string> strings_from_json(const Json &j, const std::string &where) {
  std::vector<std::string> out;
  for (const Json &s : array(j, where)) out.push_back(text(s, where));
  return out;
}

Json adam_json(const AdamConfig &cfg) {
  return {{"lr", cfg.lr},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"eps", cfg.eps},
          {"max_iters", cfg.max_iters},
          {"grad_tol", cfg.grad_tol},
          {"final_lr_fraction", cfg.final_lr_fraction},
          {"lr_scale",
           {{"intrinsics", cfg.lr_scale.intrinsics}, {"twists", cfg.lr_scale.twists}, {"depth", cfg.lr_scale.depth}}}};
}

void apply_adam_json(const Json &j, AdamConfig &cfg, const std::string &where) {
  check_keys(j, {"lr", "beta1", "beta2", "eps", "max_iters", "grad_tol", "final_lr_fraction", "lr_scale"}, where);
  read_double(j, "lr", cfg.lr, where);
  read_double(j, "beta1", cfg.beta1, where);
  read_double(j, "beta2", cfg.beta2, where);
  read_double(j, "eps", cfg.eps, where);
  read_int(j, "max_iters", cfg.max_iters, where);
  read_double(j, "grad_tol", cfg.grad_tol, where);
  read_double(j, "final_lr_fraction", cfg.final_lr_fraction, where);
  if (j.contains("lr_scale")) {
    const Json &s = j.at("lr_scale");
    const std::string w = where + ".lr_scale";
    check_keys(s, {"intrinsics", "twists", "depth"}, w);
    read_double(s, "intrinsics", cfg.lr_scale.intrinsics, w);
    read_double(s, "twists", cfg.lr_scale.twists, w);
    read_double(s, "depth", cfg.lr_scale.depth, w);
  }
}

/// Library errors raised while validating parsed content are format errors here.
template <typename F>
void as_format_error(F &&f) {
  try {
    f();
  } catch (const FormatError &) {
    throw;
  } catch (const Error &e) {
    throw FormatError(e.what());
  }
}

}  // namespace

std::filesystem::path Manifest::resolve(const std::string &path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

Json to_json(const Manifest &m) {
  Json doc = {{"version", m.version}, {"width", m.width}, {"height", m.height}, {"frames", m.frames}};
  if (m.truth) {
    Json poses = Json::array();
    for (const Pose &p : m.truth->poses) poses.push_back(pose_json(p));
    doc["ground_truth"] = {
        {"intrinsics",
         {{"raw", raw_intrinsics_json(m.truth->intrinsics)},
          {"realized", realized_json(realize_intrinsics(m.truth->intrinsics, m.width, m.height).K)}}},
        {"poses", poses},
        {"depths", m.truth->depths}};
  }
  return doc;
}

Manifest manifest_from_json(const Json &doc, const std::filesystem::path &base_dir) {
  const std::string where = "manifest";
  check_keys(doc, {"version", "width", "height", "frames", "ground_truth"}, where);
  check_version(doc, where, true);
  Manifest m;
  m.base_dir = base_dir;
  m.width = integer(field(doc, "width", where), "manifest.width");
  m.height = integer(field(doc, "height", where), "manifest.height");
  if (m.width < 2 || m.height < 2) throw FormatError("manifest dimensions must be at least 2x2");
  m.frames = strings_from_json(field(doc, "frames", where), "manifest.frames");
  if (m.frames.size() < 3) throw FormatError("manifest lists " + std::to_string(m.frames.size()) + " frames; need 3");
  if (doc.contains("ground_truth")) {
    const Json &gt = doc.at("ground_truth");
    const std::string w = "manifest.ground_truth";
    check_keys(gt, {"intrinsics", "poses", "depths"}, w);
    ManifestTruth truth;
    const Json &intr = field(gt, "intrinsics", w);
    check_keys(intr, {"raw", "realized"}, w + ".intrinsics");
    truth.intrinsics = raw_intrinsics_from_json(field(intr, "raw", w), w + ".intrinsics.raw");
    if (intr.contains("realized")) {
      const IntrinsicMatrix stated = realized_from_json(intr.at("realized"), w + ".intrinsics.realized");
      const IntrinsicMatrix K = realize_intrinsics(truth.intrinsics, m.width, m.height).K;
      const double tol = 1e-9 * std::max(m.width, m.height);
      if (std::abs(stated.fx - K.fx) > tol || std::abs(stated.fy - K.fy) > tol || std::abs(stated.cx - K.cx) > tol ||
          std::abs(stated.cy - K.cy) > tol) {
        throw FormatError("realized ground-truth intrinsics disagree with the raw parameters");
      }
    }
    for (const Json &p : array(field(gt, "poses", w), w + ".poses")) {
      truth.poses.push_back(pose_from_json(p, w + ".poses[]"));
    }
    if (truth.poses.size() != m.frames.size()) throw FormatError("ground truth needs one pose per frame");
    if (gt.contains("depths")) {
      truth.depths = strings_from_json(gt.at("depths"), w + ".depths");
      if (truth.depths.size() != m.frames.size()) throw FormatError("ground truth needs one depth file per frame");
    }
    m.truth = std::move(truth);
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path &path) {
  Manifest m = manifest_from_json(read_json(path), path.parent_path());
  auto require = [&m](const std::string &file) {
    if (!std::filesystem::exists(m.resolve(file))) {
      throw FormatError("manifest references missing file " + m.resolve(file).string());
    }
  };
  for (const std::string &f : m.frames) require(f);
  if (m.truth) {
    for (const std::string &f : m.truth->depths) require(f);
  }
  return m;
}

std::vector<Image> load_frames(const Manifest &manifest) {
  std::vector<Image> frames;
  for (const std::string &f : manifest.frames) {
    Image img = load_image(read_file(manifest.resolve(f)));
    if (img.width() != manifest.width || img.height() != manifest.height) {
      throw ShapeError("frame " + f + " is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                       ", manifest says " + std::to_string(manifest.width) + "x" + std::to_string(manifest.height));
    }
    frames.push_back(std::move(img));
  }
  return frames;
}

GroundTruth load_truth(const Manifest &manifest) {
  if (!manifest.truth) throw FormatError("manifest has no ground-truth block");
  GroundTruth gt;
  gt.intrinsics = manifest.truth->intrinsics;
  gt.width = manifest.width;
  gt.height = manifest.height;
  gt.poses = manifest.truth->poses;
  for (const std::string &f : manifest.truth->depths) {
    DepthMap d = load_depth_pfm(read_file(manifest.resolve(f)));
    if (d.width() != manifest.width || d.height() != manifest.height) {
      throw ShapeError("depth " + f + " does not match the manifest dimensions");
    }
    gt.depths.push_back(std::move(d));
  }
  return gt;
}

void RunConfig::validate() const {
  if (engine.pyramid_levels < 1) throw DomainError("pyramid_levels must be at least 1");
  if (engine.grid_rows < 2 || engine.grid_cols < 2) throw DomainError("depth grid needs at least 2x2 cells");
  engine.disparity.validate();
  engine.photometric.validate();
  if (static_cast<int>(schedule.size()) != engine.pyramid_levels) {
    throw DomainError("schedule needs one entry per pyramid level");
  }
  for (const AdamConfig &cfg : schedule) cfg.validate();
  for (const RefineStage &stage : refine) {
    if (stage.grid_rows < 2 || stage.grid_cols < 2) throw DomainError("depth grid needs at least 2x2 cells");
    if (static_cast<int>(stage.schedule.size()) != engine.pyramid_levels) {
      throw DomainError("refine schedule needs one entry per pyramid level");
    }
    for (const AdamConfig &cfg : stage.schedule) cfg.validate();
  }
}

Json to_json(const RunConfig &c) {
  Json doc = {{"version", kFormatVersion},
              {"seed", c.seed},
              {"pyramid_levels", c.engine.pyramid_levels},
              {"grid", {{"rows", c.engine.grid_rows}, {"cols", c.engine.grid_cols}}},
              {"disparity", {{"min", c.engine.disparity.min}, {"max", c.engine.disparity.max}}},
              {"photometric",
               {{"alpha", c.engine.photometric.alpha},
                {"ssim_c1", c.engine.photometric.ssim_c1},
                {"ssim_c2", c.engine.photometric.ssim_c2},
                {"smoothness_weight", c.engine.photometric.smoothness_weight},
                {"min_reprojection", c.engine.photometric.use_min_reprojection}}},
              {"median_scaling", c.median_scaling}};
  if (c.engine.intrinsics_init) doc["intrinsics_init"] = raw_intrinsics_json(*c.engine.intrinsics_init);
  Json levels = Json::array();
  for (const AdamConfig &a : c.schedule) levels.push_back(adam_json(a));
  doc["levels"] = levels;
  if (!c.refine.empty()) {
    Json stages = Json::array();
    for (const RefineStage &stage : c.refine) {
      Json stage_levels = Json::array();
      for (const AdamConfig &a : stage.schedule) stage_levels.push_back(adam_json(a));
      stages.push_back({{"grid", {{"rows", stage.grid_rows}, {"cols", stage.grid_cols}}}, {"levels", stage_levels}});
    }
    doc["refine"] = stages;
  }
  return doc;
}

namespace {

/// "adam" as the base for every level, then per-level overrides from "levels".
std::vector<AdamConfig> schedule_from_json(const Json &doc, int levels, const std::string &where) {
  AdamConfig base;
  if (doc.contains("adam")) apply_adam_json(doc.at("adam"), base, where + ".adam");
  std::vector<AdamConfig> schedule(static_cast<std::size_t>(levels), base);
  if (doc.contains("levels")) {
    const Json &entries = array(doc.at("levels"), where + ".levels");
    if (entries.size() != schedule.size()) {
      throw FormatError(where + ".levels has " + std::to_string(entries.size()) + " entries for " +
                        std::to_string(schedule.size()) + " pyramid levels");
    }
    for (std::size_t l = 0; l < entries.size(); ++l) {
      apply_adam_json(entries[l], schedule[l], where + ".levels[" + std::to_string(l) + "]");
    }
  }
  return schedule;
}

}  // namespace

RunConfig run_config_from_json(const Json &doc) {
  const std::string where = "config";
  check_keys(doc,
             {"version", "seed", "pyramid_levels", "grid", "disparity", "photometric", "intrinsics_init", "adam",
              "levels", "refine", "median_scaling"},
             where);
  check_version(doc, where, false);
  RunConfig c;
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) throw FormatError("config.seed must be a non-negative integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  read_int(doc, "pyramid_levels", c.engine.pyramid_levels, where);
  if (doc.contains("grid")) {
    const Json &g = doc.at("grid");
    check_keys(g, {"rows", "cols"}, "config.grid");
    read_int(g, "rows", c.engine.grid_rows, "config.grid");
    read_int(g, "cols", c.engine.grid_cols, "config.grid");
  }
  if (doc.contains("disparity")) {
    const Json &d = doc.at("disparity");
    check_keys(d, {"min", "max"}, "config.disparity");
    read_double(d, "min", c.engine.disparity.min, "config.disparity");
    read_double(d, "max", c.engine.disparity.max, "config.disparity");
  }
  if (doc.contains("photometric")) {
    const Json &p = doc.at("photometric");
    const std::string w = "config.photometric";
    check_keys(p, {"alpha", "ssim_c1", "ssim_c2", "smoothness_weight", "min_reprojection"}, w);
    read_double(p, "alpha", c.engine.photometric.alpha, w);
    read_double(p, "ssim_c1", c.engine.photometric.ssim_c1, w);
    read_double(p, "ssim_c2", c.engine.photometric.ssim_c2, w);
    read_double(p, "smoothness_weight", c.engine.photometric.smoothness_weight, w);
    if (p.contains("min_reprojection")) {
      c.engine.photometric.use_min_reprojection = boolean(p.at("min_reprojection"), w + ".min_reprojection");
    }
  }
  if (doc.contains("intrinsics_init") && !doc.at("intrinsics_init").is_null()) {
    c.engine.intrinsics_init = raw_intrinsics_from_json(doc.at("intrinsics_init"), "config.intrinsics_init");
  }
  if (doc.contains("median_scaling")) c.median_scaling = boolean(doc.at("median_scaling"), "config.median_scaling");

  if (c.engine.pyramid_levels < 1) throw FormatError("config.pyramid_levels must be at least 1");
  c.schedule = schedule_from_json(doc, c.engine.pyramid_levels, where);
  if (doc.contains("refine")) {
    const Json &stages = array(doc.at("refine"), "config.refine");
    for (std::size_t k = 0; k < stages.size(); ++k) {
      const std::string w = "config.refine[" + std::to_string(k) + "]";
      const Json &entry = stages[k];
      check_keys(entry, {"grid", "adam", "levels"}, w);
      RefineStage stage;
      const Json &g = field(entry, "grid", w);
      check_keys(g, {"rows", "cols"}, w + ".grid");
      stage.grid_rows = integer(field(g, "rows", w + ".grid"), w + ".grid.rows");
      stage.grid_cols = integer(field(g, "cols", w + ".grid"), w + ".grid.cols");
      stage.schedule = schedule_from_json(entry, c.engine.pyramid_levels, w);
      c.refine.push_back(std::move(stage));
    }
  }
  as_format_error([&c] { c.validate(); });
  return c;
}

Json to_json(const DepthMetrics &m) {
  return {{"abs_rel", m.abs_rel}, {"sq_rel", m.sq_rel}, {"rmse", m.rmse}, {"rmse_log", m.rmse_log}};
}

DepthMetrics depth_metrics_from_json(const Json &doc) {
  const std::string where = "depth metrics";
  check_keys(doc, {"abs_rel", "sq_rel", "rmse", "rmse_log"}, where);
  DepthMetrics m;
  m.abs_rel = number(field(doc, "abs_rel", where), "abs_rel");
  m.sq_rel = number(field(doc, "sq_rel", where), "sq_rel");
  m.rmse = number(field(doc, "rmse", where), "rmse");
  m.rmse_log = number(field(doc, "rmse_log", where), "rmse_log");
  return m;
}

Json metric_columns_json() {
  Json out = Json::object();
  for (const MetricColumn &c : kMetricColumns) out[std::string(c.key)] = std::string(c.column);
  return out;
}

Json to_json(const TruthComparison &c) {
  Json pairs = Json::array();
  for (const PairError &p : c.pairs) {
    pairs.push_back({{"target", p.target},
                     {"source", p.source},
                     {"rotation_error_rad", p.rotation_error_rad},
                     {"translation_direction_error_rad", p.translation_direction_error_rad}});
  }
  Json depths = Json::array();
  for (const FrameDepthErrors &d : c.depths) depths.push_back({{"frame", d.frame}, {"metrics", to_json(d.metrics)}});
  return {{"fx_rel_error", c.fx_rel_error},
          {"fy_rel_error", c.fy_rel_error},
          {"cx_n_error", c.cx_n_error},
          {"cy_n_error", c.cy_n_error},
          {"pairs", pairs},
          {"depths", depths}};
}

TruthComparison comparison_from_json(const Json &doc) {
  const std::string where = "comparison";
  check_keys(doc, {"fx_rel_error", "fy_rel_error", "cx_n_error", "cy_n_error", "pairs", "depths"}, where);
  TruthComparison c;
  c.fx_rel_error = number(field(doc, "fx_rel_error", where), "fx_rel_error");
  c.fy_rel_error = number(field(doc, "fy_rel_error", where), "fy_rel_error");
  c.cx_n_error = number(field(doc, "cx_n_error", where), "cx_n_error");
  c.cy_n_error = number(field(doc, "cy_n_error", where), "cy_n_error");
  for (const Json &p : array(field(doc, "pairs", where), "comparison.pairs")) {
    const std::string w = "comparison.pairs[]";
    check_keys(p, {"target", "source", "rotation_error_rad", "translation_direction_error_rad"}, w);
    c.pairs.push_back({integer(field(p, "target", w), w), integer(field(p, "source", w), w),
                       number(field(p, "rotation_error_rad", w), w),
                       number(field(p, "translation_direction_error_rad", w), w)});
  }
  if (doc.contains("depths")) {
    for (const Json &d : array(doc.at("depths"), "comparison.depths")) {
      const std::string w = "comparison.depths[]";
      check_keys(d, {"frame", "metrics"}, w);
      c.depths.push_back({integer(field(d, "frame", w), w), depth_metrics_from_json(field(d, "metrics", w))});
    }
  }
  return c;
}

Json to_json(const CalibReport &r) {
  Json pairs = Json::array();
  for (const PairRecord &p : r.pairs) {
    const auto xi = p.twist.to_array();
    pairs.push_back({{"target", p.target},
                     {"source", p.source},
                     {"twist", Json::array({xi[0], xi[1], xi[2], xi[3], xi[4], xi[5]})},
                     {"pose", pose_json(p.pose)}});
  }
  Json depths = Json::array();
  for (std::size_t i = 0; i < r.depth_frames.size(); ++i) {
    Json d = {{"frame", r.depth_frames[i]}};
    if (i < r.depth_files.size()) d["file"] = r.depth_files[i];
    depths.push_back(d);
  }
  Json levels = Json::array();
  for (const LevelRecord &l : r.levels) {
    Json history = Json::array();
    for (double v : l.history) history.push_back(number_json(v));
    levels.push_back({{"stage", l.stage},
                      {"level", l.level},
                      {"width", l.width},
                      {"height", l.height},
                      {"iterations", l.iterations},
                      {"stop_reason", to_string(l.stop_reason)},
                      {"history", history}});
  }
  Json doc = {{"version", kFormatVersion},
              {"width", r.width},
              {"height", r.height},
              {"intrinsics", {{"raw", raw_intrinsics_json(r.intrinsics)}, {"realized", realized_json(r.realized)}}},
              {"pairs", pairs},
              {"depths", depths},
              {"initial_objective", number_json(r.initial_objective)},
              {"final_objective", number_json(r.final_objective)},
              {"levels", levels},
              {"stop_reason", to_string(r.stop_reason)},
              {"wall_clock_seconds", r.wall_clock_seconds}};
  if (r.error) {
    doc["error"] = {{"level", r.error->level}, {"iteration", r.error->iteration}, {"message", r.error->message}};
  }
  // Intrinsics here are learned, never given.
  doc["evaluation"] = {{"median_scaling", r.median_scaling}, {"intrinsics", "learned"}};
  if (r.comparison) doc["comparison"] = to_json(*r.comparison);
  return doc;
}

CalibReport report_from_json(const Json &doc) {
  const std::string where = "report";
  check_keys(doc,
             {"version", "width", "height", "intrinsics", "pairs", "depths", "initial_objective", "final_objective",
              "levels", "stop_reason", "wall_clock_seconds", "error", "comparison", "evaluation"},
             where);
  check_version(doc, where, true);
  CalibReport r;
  r.width = integer(field(doc, "width", where), "report.width");
  r.height = integer(field(doc, "height", where), "report.height");
  const Json &intr = field(doc, "intrinsics", where);
  check_keys(intr, {"raw", "realized"}, "report.intrinsics");
  r.intrinsics = raw_intrinsics_from_json(field(intr, "raw", "report.intrinsics"), "report.intrinsics.raw");
  r.realized = realized_from_json(field(intr, "realized", "report.intrinsics"), "report.intrinsics.realized");
  for (const Json &p : array(field(doc, "pairs", where), "report.pairs")) {
    const std::string w = "report.pairs[]";
    check_keys(p, {"target", "source", "twist", "pose"}, w);
    PairRecord rec;
    rec.target = integer(field(p, "target", w), w + ".target");
    rec.source = integer(field(p, "source", w), w + ".source");
    const Json &xi = array(field(p, "twist", w), w + ".twist", 6);
    std::array<double, 6> values{};
    for (int i = 0; i < 6; ++i) values[i] = number(xi[i], w + ".twist");
    rec.twist = Twist::from_array(values);
    rec.pose = pose_from_json(field(p, "pose", w), w + ".pose");
    r.pairs.push_back(rec);
  }
  for (const Json &d : array(field(doc, "depths", where), "report.depths")) {
    const std::string w = "report.depths[]";
    check_keys(d, {"frame", "file"}, w);
    r.depth_frames.push_back(integer(field(d, "frame", w), w + ".frame"));
    if (d.contains("file")) r.depth_files.push_back(text(d.at("file"), w + ".file"));
  }
  if (!r.depth_files.empty() && r.depth_files.size() != r.depth_frames.size()) {
    throw FormatError("report depth entries must all or none name a file");
  }
  r.initial_objective = number(field(doc, "initial_objective", where), "report.initial_objective");
  r.final_objective = number(field(doc, "final_objective", where), "report.final_objective");
  for (const Json &l : array(field(doc, "levels", where), "report.levels")) {
    const std::string w = "report.levels[]";
    check_keys(l, {"stage", "level", "width", "height", "iterations", "stop_reason", "history"}, w);
    LevelRecord rec;
    if (l.contains("stage")) rec.stage = integer(l.at("stage"), w + ".stage");
    rec.level = integer(field(l, "level", w), w + ".level");
    rec.width = integer(field(l, "width", w), w + ".width");
    rec.height = integer(field(l, "height", w), w + ".height");
    rec.iterations = integer(field(l, "iterations", w), w + ".iterations");
    rec.stop_reason = stop_reason_from_string(text(field(l, "stop_reason", w), w + ".stop_reason"));
    for (const Json &v : array(field(l, "history", w), w + ".history")) rec.history.push_back(number(v, w));
    r.levels.push_back(std::move(rec));
  }
  r.stop_reason = stop_reason_from_string(text(field(doc, "stop_reason", where), "report.stop_reason"));
  r.wall_clock_seconds = number(field(doc, "wall_clock_seconds", where), "report.wall_clock_seconds");
  if (doc.contains("error")) {
    const Json &e = doc.at("error");
    check_keys(e, {"level", "iteration", "message"}, "report.error");
    r.error = CalibError{integer(field(e, "level", "report.error"), "report.error.level"),
                         integer(field(e, "iteration", "report.error"), "report.error.iteration"),
                         text(field(e, "message", "report.error"), "report.error.message")};
  }
  if (doc.contains("evaluation")) {
    const Json &e = doc.at("evaluation");
    check_keys(e, {"median_scaling", "intrinsics"}, "report.evaluation");
    if (e.contains("median_scaling")) r.median_scaling = boolean(e.at("median_scaling"), "report.evaluation");
  }
  if (doc.contains("comparison")) r.comparison = comparison_from_json(doc.at("comparison"));
  return r;
}

Json read_json(const std::filesystem::path &path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  try {
    return Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::parse_error &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string dump_json(const Json &doc) { return doc.dump(2) + "\n"; }

void write_json(const std::filesystem::path &path, const Json &doc) {
  const std::string s = dump_json(doc);
  write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
}

}  // namespace selfcal
