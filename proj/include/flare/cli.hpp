#pragma once

#include <string>
#include <vector>

#include "flare/formation.hpp"
#include "flare/psf.hpp"
#include "flare/solver.hpp"

namespace flare {

// Everything a run needs, loadable from one JSON file so an experiment is
// reproducible from a single artifact. Missing keys keep their defaults.
struct AppConfig {
  OpticalConfig optics;
  SynthParams synth;
  BolParams bol;
  SolverConfig solver;
  PipelineParams pipeline;
  bool gamma_decode = false;  // treat files as 2.2-gamma encoded
};

AppConfig load_config(const std::string& path);

enum class Command { Synth, Masks, Deglow, Deghost, Joint, Eval };

struct RunManifest {
  Command command = Command::Joint;
  std::string config_path;
  std::vector<std::string> inputs;
  std::string output_dir = "out";
  std::string gt_path;
  uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  bool json_stdout = false;
  bool force = false;
  bool debug_dumps = false;
};

// exit code: 0 success, 1 pipeline error, 2 usage error
int run_cli(int argc, const char* const* argv);

}  // namespace flare
