#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace selfcal {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNotConverged = 3,
};

struct SynthOptions {
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int width = 160;
  int height = 120;
  int frames = 5;
  std::string scene = "three-planes";
  int channels = 3;
};

struct CalibrateOptions {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> config;
  std::filesystem::path report;
};

struct GradcheckOptions {
  std::uint64_t seed = 1;
  double eps = 1e-4;
  int width = 64;
  int height = 48;
};

struct EvalOptions {
  std::filesystem::path pred;
  std::filesystem::path truth;
  std::filesystem::path out;
  /// Ground-truth frame a single PFM prediction is compared with.
  int frame = 0;
  bool median_scaling = true;
};

int cmd_synth(const SynthOptions &opts, std::ostream &out, std::ostream &err);
int cmd_calibrate(const CalibrateOptions &opts, std::ostream &out, std::ostream &err);
int cmd_gradcheck(const GradcheckOptions &opts, std::ostream &out, std::ostream &err);
int cmd_eval(const EvalOptions &opts, std::ostream &out, std::ostream &err);

/// Parses `args` (without the program name) and dispatches to a subcommand.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace selfcal
