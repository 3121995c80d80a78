#include "selfcal/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <ostream>
#include <regex>

#include "selfcal/engine.hpp"
#include "selfcal/errors.hpp"
#include "selfcal/eval.hpp"
#include "selfcal/gradcheck.hpp"
#include "selfcal/io.hpp"
#include "selfcal/scene.hpp"

namespace selfcal {
namespace {

std::string numbered(const char *prefix, int index, const char *ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d.%s", prefix, index, ext);
  return buf;
}

/// Runs a command body and maps library and filesystem failures to data errors.
template <typename F>
int guarded(std::ostream &err, F &&body) {
  try {
    return body();
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::filesystem::filesystem_error &e) {
    err << "error: " << e.what() << "\n";
  } catch (const Json::exception &e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitData;
}

}  // namespace

int cmd_synth(const SynthOptions &opts, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const SceneSpec spec = scene_preset(opts.scene, opts.width, opts.height, opts.seed, opts.channels);
    const Sequence seq =
        generate_sequence(spec, default_synthetic_intrinsics(), default_trajectory(opts.frames, opts.seed), opts.frames);
    std::filesystem::create_directories(opts.out);

    Manifest manifest;
    manifest.width = opts.width;
    manifest.height = opts.height;
    ManifestTruth truth;
    truth.intrinsics = seq.truth.intrinsics;
    truth.poses = seq.truth.poses;
    const bool color = opts.channels == 3;
    for (int k = 0; k < opts.frames; ++k) {
      const std::string frame = numbered("frame", k, color ? "ppm" : "pgm");
      const std::string depth = numbered("depth", k, "pfm");
      write_file(opts.out / frame, save_image(seq.frames[k]));
      write_file(opts.out / depth, save_depth_pfm(seq.truth.depths[k]));
      manifest.frames.push_back(frame);
      truth.depths.push_back(depth);
    }
    manifest.truth = std::move(truth);
    write_json(opts.out / "manifest.json", to_json(manifest));
    out << "wrote " << opts.frames << " frames to " << opts.out.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_calibrate(const CalibrateOptions &opts, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const Manifest manifest = load_manifest(opts.manifest);
    const RunConfig config = opts.config ? run_config_from_json(read_json(*opts.config)) : RunConfig{};
    config.validate();
    const std::vector<Image> frames = load_frames(manifest);
    std::optional<GroundTruth> truth;
    if (manifest.truth) truth = load_truth(manifest);

    InitializedProblem init;
    try {
      init = init_problem(frames, config.engine);
    } catch (const ShapeError &e) {
      throw ProblemError(e.what());
    }
    CalibReport report = calibrate(init.problem, init.params, config.schedule, config.refine);
    report.median_scaling = config.median_scaling;
    if (truth) report.comparison = compare_to_truth(report, *truth, config.median_scaling);

    const std::filesystem::path dir = opts.report.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    const std::string stem = opts.report.stem().string();
    for (std::size_t i = 0; i < report.depths.size(); ++i) {
      const std::string name = numbered((stem + "_depth").c_str(), report.depth_frames[i], "pfm");
      write_file(dir / name, save_depth_pfm(report.depths[i]));
      report.depth_files.push_back(name);
    }
    write_json(opts.report, to_json(report));

    const IntrinsicMatrix &K = report.realized;
    out << "fx " << K.fx << " fy " << K.fy << " cx " << K.cx << " cy " << K.cy << "\n";
    out << "objective " << report.initial_objective << " -> " << report.final_objective << " ("
        << to_string(report.stop_reason) << ")\n";
    if (report.error) {
      err << "error: level " << report.error->level << ": " << report.error->message << "\n";
      return static_cast<int>(kExitNotConverged);
    }
    return static_cast<int>(report.stop_reason == StopReason::kConverged ? kExitOk : kExitNotConverged);
  });
}

int cmd_gradcheck(const GradcheckOptions &opts, std::ostream &out, std::ostream &err) {
  if (!(opts.eps > 0.0)) {
    err << "error: --eps must be positive\n";
    return kExitData;
  }
  return guarded(err, [&] {
    const GradcheckCase c = make_gradcheck_case(opts.seed, opts.width, opts.height);
    const GradcheckResult r = check_gradient(c.problem, c.params, opts.eps);
    constexpr double kTolerance = 1e-4;
    bool ok = true;
    out << "group        components  worst_rel_error\n";
    for (ParamGroup g : kParamGroups) {
      const int i = static_cast<int>(g);
      char line[128];
      std::snprintf(line, sizeof(line), "%-12s %10d  %.3e\n", to_string(g), r.compared[i], r.worst[i]);
      out << line;
      ok = ok && r.worst[i] <= kTolerance;
    }
    out << (ok ? "ok" : "FAILED") << "\n";
    return static_cast<int>(ok ? kExitOk : kExitData);
  });
}

namespace {

struct Prediction {
  std::vector<int> frames;
  std::vector<DepthMap> depths;
  std::optional<CalibReport> report;
};

Prediction load_prediction(const EvalOptions &opts) {
  Prediction p;
  if (opts.pred.extension() == ".json") {
    CalibReport report = report_from_json(read_json(opts.pred));
    const std::filesystem::path dir = opts.pred.parent_path();
    for (std::size_t i = 0; i < report.depth_files.size(); ++i) {
      p.frames.push_back(report.depth_frames[i]);
      p.depths.push_back(load_depth_pfm(read_file(dir / report.depth_files[i])));
    }
    p.report = std::move(report);
  } else {
    p.frames.push_back(opts.frame);
    p.depths.push_back(load_depth_pfm(read_file(opts.pred)));
  }
  return p;
}

}  // namespace

int cmd_eval(const EvalOptions &opts, std::ostream &out, std::ostream &err) {
  return guarded(err, [&] {
    const Manifest manifest = load_manifest(opts.truth);
    const Prediction pred = load_prediction(opts);
    std::optional<GroundTruth> truth;
    if (manifest.truth) truth = load_truth(manifest);

    Json doc = {{"version", kFormatVersion},
                {"median_scaling", opts.median_scaling},
                {"clamp", {{"min", DepthClamp{}.min}, {"max", DepthClamp{}.max}}},
                {"columns", metric_columns_json()}};
    bool evaluated = false;
    if (truth && !truth->depths.empty() && !pred.depths.empty()) {
      Json frames = Json::array();
      DepthMetrics mean;
      for (std::size_t i = 0; i < pred.depths.size(); ++i) {
        const int f = pred.frames[i];
        if (f < 0 || f >= static_cast<int>(truth->depths.size())) {
          throw ShapeError("prediction refers to frame " + std::to_string(f) + " outside the sequence");
        }
        const DepthMetrics m = depth_metrics(pred.depths[i], truth->depths[f], DepthClamp{}, opts.median_scaling);
        Json entry = to_json(m);
        entry["frame"] = f;
        frames.push_back(entry);
        mean.abs_rel += m.abs_rel;
        mean.sq_rel += m.sq_rel;
        mean.rmse += m.rmse;
        mean.rmse_log += m.rmse_log;
      }
      const double n = static_cast<double>(pred.depths.size());
      mean = {mean.abs_rel / n, mean.sq_rel / n, mean.rmse / n, mean.rmse_log / n};
      doc["frames"] = frames;
      doc["metrics"] = to_json(mean);
      evaluated = true;
    }
    if (truth && pred.report) {
      CalibReport report = *pred.report;
      report.depths.clear();
      report.depth_frames.clear();
      const TruthComparison c = compare_to_truth(report, *truth, opts.median_scaling);
      doc["intrinsics"] = {{"fx_rel_error", c.fx_rel_error},
                           {"fy_rel_error", c.fy_rel_error},
                           {"cx_n_error", c.cx_n_error},
                           {"cy_n_error", c.cy_n_error}};
      doc["pairs"] = to_json(c)["pairs"];
      evaluated = true;
    }
    if (!evaluated) throw FormatError("nothing to evaluate: no ground-truth depths or calibration report");
    const std::filesystem::path dir = opts.out.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    write_json(opts.out, doc);
    if (doc.contains("metrics")) {
      for (const MetricColumn &c : kMetricColumns) {
        out << c.column << ": " << doc["metrics"][std::string(c.key)].get<double>() << "\n";
      }
    }
    return static_cast<int>(kExitOk);
  });
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Self-supervised camera calibration from image sequences"};
  app.require_subcommand(1);

  SynthOptions synth;
  CLI::App *synth_cmd = app.add_subcommand("synth", "Render a synthetic sequence with ground truth");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Scene and trajectory seed");
  synth_cmd->add_option("--width", synth.width, "Image width")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", synth.height, "Image height")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--frames", synth.frames, "Number of frames");
  synth_cmd->add_option("--scene", synth.scene, "Scene preset: three-planes or fronto");
  synth_cmd->add_option("--channels", synth.channels, "1 (PGM) or 3 (PPM)")->check(CLI::IsMember({1, 3}));

  CalibrateOptions calib;
  std::string config_path;
  CLI::App *calib_cmd = app.add_subcommand("calibrate", "Recover intrinsics, poses and depth");
  calib_cmd->add_option("--manifest", calib.manifest, "Sequence manifest")->required();
  calib_cmd->add_option("--config", config_path, "Run configuration JSON");
  calib_cmd->add_option("--report", calib.report, "Report path")->required();

  GradcheckOptions grad;
  std::string size;
  CLI::App *grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad_cmd->add_option("--seed", grad.seed, "Problem seed");
  grad_cmd->add_option("--eps", grad.eps, "Finite-difference step");
  grad_cmd->add_option("--size", size, "Image size as WxH");

  EvalOptions eval;
  bool no_median = false;
  int frame = 0;
  CLI::App *eval_cmd = app.add_subcommand("eval", "Depth metrics and calibration errors");
  eval_cmd->add_option("--pred", eval.pred, "Predicted depth PFM or calibration report")->required();
  eval_cmd->add_option("--truth", eval.truth, "Manifest with ground truth")->required();
  eval_cmd->add_option("--out", eval.out, "Output JSON")->required();
  eval_cmd->add_option("--frame", frame, "Frame index for a single PFM prediction");
  eval_cmd->add_flag("--no-median-scaling", no_median, "Compare depths without median rescaling");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  if (synth_cmd->parsed()) return cmd_synth(synth, out, err);
  if (calib_cmd->parsed()) {
    if (!config_path.empty()) calib.config = config_path;
    return cmd_calibrate(calib, out, err);
  }
  if (grad_cmd->parsed()) {
    if (!size.empty()) {
      static const std::regex pattern(R"((\d+)x(\d+))");
      std::smatch m;
      if (!std::regex_match(size, m, pattern)) {
        err << "usage error: --size must look like 64x48\n";
        return kExitUsage;
      }
      grad.width = std::stoi(m[1]);
      grad.height = std::stoi(m[2]);
    }
    return cmd_gradcheck(grad, out, err);
  }
  eval.frame = frame;
  eval.median_scaling = !no_median;
  return cmd_eval(eval, out, err);
}

}  // namespace selfcal
