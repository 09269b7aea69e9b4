#pragma once

// Machine-readable fit results (JSON, schema "ilhte.fit/1"), simulation
// parameter sidecars, and plain-text reports.

#include <map>
#include <string>
#include <vector>

#include "ilhte/config.hpp"
#include "ilhte/core.hpp"

namespace ilhte {

inline constexpr const char* kFitSchema = "ilhte.fit/1";
inline constexpr const char* kParamsSchema = "ilhte.params/1";

struct FitRecord {
  Fit fit;
  std::string config_json;                   // resolved configuration as written
  std::map<std::string, std::string> inputs;  // e.g. data / items paths
};

/// Serializes a fit with the resolved configuration and input provenance.
/// Output is a deterministic function of the arguments.
std::string fit_to_json(const Fit& fit, const RunConfig& config,
                        const std::map<std::string, std::string>& inputs);

/// Parses a document written by fit_to_json. Throws ValidationError on a
/// schema mismatch or missing fields.
FitRecord fit_from_json(const std::string& text);
FitRecord read_fit_file(const std::string& path);

std::string params_to_json(const TrueParams& params, const RunConfig& config,
                           const std::map<std::string, std::string>& extra);
TrueParams params_from_json(const std::string& text);

/// Side-by-side coefficient table in the layout of the empirical results:
/// fixed effects as "estimate (se)", variance components, fit statistics.
std::string format_fit_table(const std::vector<const Fit*>& fits);

/// "# ilhte <config json>" provenance line for CSV outputs.
std::string provenance_line(const RunConfig& config);

}  // namespace ilhte
