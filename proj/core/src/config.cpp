#include "ilhte/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ilhte {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void reject(const std::string& key, const std::string& why) {
  throw ValidationError("config key '" + key + "': " + why);
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) reject(key, "expected a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) reject(key, "expected an integer");
  return v.get<int>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) reject(key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  if (const char* env = std::getenv("ILHTE_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v < 4096) c.jobs = static_cast<int>(v);
  }
  return c;
}

void check_config(const RunConfig& c) {
  if (c.jobs < 1) reject("jobs", "must be >= 1");
  if (c.study != "main" && c.study != "rho") reject("study", "must be \"main\" or \"rho\"");
  if (c.preset != "desk" && c.preset != "full") reject("preset", "must be \"desk\" or \"full\"");
  if (c.n_reps && *c.n_reps < 1) reject("n_reps", "must be >= 1");
  if (c.n_persons < 2) reject("n_persons", "must be >= 2");
  if (!(c.outer_tolerance >= 0.0)) reject("outer_tolerance", "must be >= 0");
  if (!(c.theta_tolerance >= 0.0)) reject("theta_tolerance", "must be >= 0");
  if (!(c.inner_tolerance >= 0.0)) reject("inner_tolerance", "must be >= 0");
  if (c.max_evaluations < 1) reject("max_evaluations", "must be >= 1");
  if (c.restarts < 0) reject("restarts", "must be >= 0");
  if (c.expansion != "rsm" && c.expansion != "pcm") {
    reject("expansion", "must be \"rsm\" or \"pcm\"");
  }
}

RunConfig parse_config(const std::string& json_text, RunConfig c) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config: top level must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    if (key == "seed") {
      if (!v.is_number_unsigned()) reject(key, "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "jobs") {
      c.jobs = get_int(v, key);
    } else if (key == "study") {
      c.study = get_string(v, key);
    } else if (key == "preset") {
      c.preset = get_string(v, key);
    } else if (key == "n_reps") {
      if (v.is_null()) {
        c.n_reps.reset();
      } else {
        c.n_reps = get_int(v, key);
      }
    } else if (key == "n_persons") {
      c.n_persons = get_int(v, key);
    } else if (key == "outer_tolerance") {
      c.outer_tolerance = get_number(v, key);
    } else if (key == "theta_tolerance") {
      c.theta_tolerance = get_number(v, key);
    } else if (key == "inner_tolerance") {
      c.inner_tolerance = get_number(v, key);
    } else if (key == "max_evaluations") {
      c.max_evaluations = get_int(v, key);
    } else if (key == "restarts") {
      c.restarts = get_int(v, key);
    } else if (key == "expansion") {
      c.expansion = get_string(v, key);
    } else if (key == "out") {
      c.out = get_string(v, key);
    } else {
      reject(key, "unknown key");
    }
  }
  check_config(c);
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["study"] = c.study;
  j["preset"] = c.preset;
  j["n_reps"] = c.n_reps ? json(*c.n_reps) : json(nullptr);
  j["n_persons"] = c.n_persons;
  j["outer_tolerance"] = c.outer_tolerance;
  j["theta_tolerance"] = c.theta_tolerance;
  j["inner_tolerance"] = c.inner_tolerance;
  j["max_evaluations"] = c.max_evaluations;
  j["restarts"] = c.restarts;
  j["expansion"] = c.expansion;
  j["out"] = c.out;
  return j.dump();
}

FitOptions fit_options(const RunConfig& c) {
  FitOptions o;
  o.outer_tolerance = c.outer_tolerance;
  o.theta_tolerance = c.theta_tolerance;
  o.inner.tolerance = c.inner_tolerance;
  o.max_evaluations = c.max_evaluations;
  o.restarts = c.restarts;
  o.seed = c.seed;
  return o;
}

}  // namespace ilhte
