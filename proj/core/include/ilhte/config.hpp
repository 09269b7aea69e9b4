#pragma once

// Run configuration shared by the command-line subcommands. A JSON object
// with the keys below; absent keys keep their defaults and unknown keys are
// rejected.
//
//   seed              unsigned integer   base seed for simulation and restarts
//   jobs              integer >= 1       worker threads for mc-run
//   study             "main" | "rho"
//   preset            "desk" | "full"
//   n_reps            integer >= 1       overrides replications per condition
//   n_persons         integer >= 2       hdrs-sim sample size
//   outer_tolerance   number >= 0        relative deviance spread of the simplex
//   theta_tolerance   number >= 0        simplex diameter in variance parameters
//   inner_tolerance   number >= 0        PIRLS relative deviance change
//   max_evaluations   integer >= 1       outer objective evaluations
//   restarts          integer >= 0       jittered optimizer restarts
//   expansion         "rsm" | "pcm"
//   out               string             output path or directory

#include <cstdint>
#include <optional>
#include <string>

#include "ilhte/glmm.hpp"

namespace ilhte {

struct RunConfig {
  std::uint64_t seed = 20240501;
  int jobs = 1;
  std::string study = "main";
  std::string preset = "desk";
  std::optional<int> n_reps;
  int n_persons = 1000;
  double outer_tolerance = 1e-6;
  double theta_tolerance = 1e-3;
  double inner_tolerance = 1e-8;
  int max_evaluations = 500;
  int restarts = 2;
  std::string expansion = "rsm";
  std::string out;
};

/// Defaults, with jobs taken from the ILHTE_JOBS environment variable when it
/// holds a positive integer.
RunConfig default_config();

/// Parses a JSON object on top of `base`. Throws ValidationError naming the
/// offending key for unknown keys, wrong types and out-of-range values.
RunConfig parse_config(const std::string& json_text, RunConfig base = default_config());
RunConfig load_config(const std::string& path, RunConfig base = default_config());

/// Checks ranges of every field (the checks parse_config applies).
void check_config(const RunConfig& config);

/// Canonical JSON with keys in a fixed order; n_reps is null when unset.
std::string config_to_json(const RunConfig& config);

FitOptions fit_options(const RunConfig& config);

}  // namespace ilhte
