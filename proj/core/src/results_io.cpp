#include "ilhte/results_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ilhte {
namespace {

using json = nlohmann::ordered_json;

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_real(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("fit json: missing field '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_null()) return std::nan("");
  if (!v.is_number()) throw ValidationError(std::string("fit json: field '") + key + "' is not a number");
  return v.get<double>();
}

json opt_real(const std::optional<double>& v) { return v ? real(*v) : json(nullptr); }

std::optional<double> read_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json parse_doc(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string fit_to_json(const Fit& fit, const RunConfig& config,
                        const std::map<std::string, std::string>& inputs) {
  json j;
  j["schema"] = kFitSchema;
  j["config"] = json::parse(config_to_json(config));
  json in = json::object();
  for (const auto& [k, v] : inputs) in[k] = v;
  j["inputs"] = in;
  j["model"] = model_label(fit.spec.kind);
  j["expansion"] = expansion_label(fit.spec.expansion);
  j["tx_by_baseline"] = fit.spec.include_tx_by_baseline;
  j["converged"] = fit.converged;
  j["message"] = fit.message;
  j["n_obs"] = fit.n_obs;
  j["n_excluded"] = fit.n_excluded;
  j["n_evaluations"] = fit.n_evaluations;
  j["n_variance_params"] = fit.n_variance_params;
  j["loglik"] = real(fit.loglik);
  j["aic"] = real(fit.aic);
  j["bic"] = real(fit.bic);
  j["r_squared"] = real(fit.r_squared);

  json fixed = json::array();
  for (const auto& c : fit.fixed) {
    fixed.push_back({{"name", c.name}, {"estimate", real(c.estimate)}, {"se", real(c.se)}});
  }
  j["fixed"] = fixed;
  json cov = json::array();
  for (Eigen::Index r = 0; r < fit.fixed_cov.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < fit.fixed_cov.cols(); ++c) row.push_back(real(fit.fixed_cov(r, c)));
    cov.push_back(row);
  }
  j["fixed_cov"] = cov;
  j["varcomp"] = {{"person_var", opt_real(fit.varcomp.person_var)},
                  {"item_var", opt_real(fit.varcomp.item_var)},
                  {"zeta_var", opt_real(fit.varcomp.zeta_var)},
                  {"cov_b_zeta", opt_real(fit.varcomp.cov_b_zeta)}};
  json theta = json::array();
  for (double t : fit.theta) theta.push_back(real(t));
  j["theta"] = theta;

  json items = json::array();
  for (const auto& e : fit.eb_items) {
    items.push_back({{"item_id", e.item_id},
                     {"b", real(e.b)},
                     {"zeta", real(e.zeta)},
                     {"sd_b", real(e.sd_b)},
                     {"sd_zeta", real(e.sd_zeta)}});
  }
  j["eb_items"] = items;
  // Dense index -> external id maps.
  j["item_ids"] = fit.item_ids;
  j["person_ids"] = fit.person_ids;
  return j.dump(1) + "\n";
}

FitRecord fit_from_json(const std::string& text) {
  const json j = parse_doc(text, "fit json");
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != kFitSchema) {
    throw ValidationError(std::string("fit json: expected schema '") + kFitSchema + "'");
  }
  FitRecord rec;
  try {
    Fit& f = rec.fit;
    f.spec.kind = parse_model_label(j.at("model").get<std::string>());
    f.spec.expansion = parse_expansion(j.at("expansion").get<std::string>());
    f.spec.include_tx_by_baseline = j.at("tx_by_baseline").get<bool>();
    f.converged = j.at("converged").get<bool>();
    f.message = j.at("message").get<std::string>();
    f.n_obs = j.at("n_obs").get<std::size_t>();
    f.n_excluded = j.at("n_excluded").get<std::size_t>();
    f.n_evaluations = j.at("n_evaluations").get<int>();
    f.n_variance_params = j.at("n_variance_params").get<std::size_t>();
    f.loglik = read_real(j, "loglik");
    f.aic = read_real(j, "aic");
    f.bic = read_real(j, "bic");
    f.r_squared = read_real(j, "r_squared");
    for (const auto& c : j.at("fixed")) {
      f.fixed.push_back({c.at("name").get<std::string>(), read_real(c, "estimate"),
                         read_real(c, "se")});
    }
    const auto& cov = j.at("fixed_cov");
    const auto p = static_cast<Eigen::Index>(cov.size());
    f.fixed_cov.resize(p, p);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto& row = cov.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != p) {
        throw ValidationError("fit json: fixed_cov is not square");
      }
      for (Eigen::Index c = 0; c < p; ++c) {
        const auto& v = row.at(static_cast<std::size_t>(c));
        f.fixed_cov(r, c) = v.is_null() ? std::nan("") : v.get<double>();
      }
    }
    const auto& vc = j.at("varcomp");
    f.varcomp.person_var = read_opt(vc, "person_var");
    f.varcomp.item_var = read_opt(vc, "item_var");
    f.varcomp.zeta_var = read_opt(vc, "zeta_var");
    f.varcomp.cov_b_zeta = read_opt(vc, "cov_b_zeta");
    for (const auto& t : j.at("theta")) f.theta.push_back(t.is_null() ? std::nan("") : t.get<double>());
    for (const auto& e : j.at("eb_items")) {
      f.eb_items.push_back({e.at("item_id").get<std::string>(), read_real(e, "b"),
                            read_real(e, "zeta"), read_real(e, "sd_b"), read_real(e, "sd_zeta")});
    }
    f.item_ids = j.at("item_ids").get<std::vector<std::string>>();
    f.person_ids = j.at("person_ids").get<std::vector<std::string>>();
    rec.config_json = j.at("config").dump();
    for (const auto& [k, v] : j.at("inputs").items()) rec.inputs[k] = v.get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("fit json: ") + e.what());
  }
  return rec;
}

FitRecord read_fit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open fit file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fit_from_json(ss.str());
}

std::string params_to_json(const TrueParams& p, const RunConfig& config,
                           const std::map<std::string, std::string>& extra) {
  json j;
  j["schema"] = kParamsSchema;
  j["config"] = json::parse(config_to_json(config));
  json ex = json::object();
  for (const auto& [k, v] : extra) ex[k] = v;
  j["context"] = ex;
  j["beta0"] = p.beta0;
  j["beta1"] = p.beta1;
  j["beta_cov"] = p.beta_cov;
  j["beta_interact"] = p.beta_interact;
  j["sigma_theta"] = p.sigma_theta;
  j["sigma_b"] = p.sigma_b;
  j["sigma_zeta"] = p.sigma_zeta;
  j["rho"] = p.rho;
  j["thresholds"] = p.thresholds;
  j["gamma1"] = p.gamma1;
  j["gamma2"] = p.gamma2;
  j["item_b"] = p.item_b;
  j["item_zeta"] = p.item_zeta;
  return j.dump(1) + "\n";
}

TrueParams params_from_json(const std::string& text) {
  const json j = parse_doc(text, "params json");
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != kParamsSchema) {
    throw ValidationError(std::string("params json: expected schema '") + kParamsSchema + "'");
  }
  TrueParams p;
  try {
    p.beta0 = j.at("beta0").get<double>();
    p.beta1 = j.at("beta1").get<double>();
    p.beta_cov = j.at("beta_cov").get<double>();
    p.beta_interact = j.at("beta_interact").get<double>();
    p.sigma_theta = j.at("sigma_theta").get<double>();
    p.sigma_b = j.at("sigma_b").get<double>();
    p.sigma_zeta = j.at("sigma_zeta").get<double>();
    p.rho = j.at("rho").get<double>();
    p.thresholds = j.at("thresholds").get<std::vector<double>>();
    p.gamma1 = j.at("gamma1").get<double>();
    p.gamma2 = j.at("gamma2").get<double>();
    p.item_b = j.at("item_b").get<std::vector<double>>();
    p.item_zeta = j.at("item_zeta").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("params json: ") + e.what());
  }
  return p;
}

std::string format_fit_table(const std::vector<const Fit*>& fits) {
  // Row labels in first-appearance order across fits.
  std::vector<std::string> coef_rows;
  for (const Fit* f : fits) {
    for (const auto& c : f->fixed) {
      bool seen = false;
      for (const auto& r : coef_rows) seen = seen || r == c.name;
      if (!seen) coef_rows.push_back(c.name);
    }
  }
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header{""};
  for (const Fit* f : fits) header.push_back(model_label(f->spec.kind));
  table.push_back(header);
  for (const auto& name : coef_rows) {
    std::vector<std::string> row{name};
    for (const Fit* f : fits) {
      const Coefficient* c = f->find(name);
      row.push_back(c ? fixed3(c->estimate) + " (" + fixed3(c->se) + ")" : "");
    }
    table.push_back(row);
  }
  auto vc_row = [&](const std::string& label, auto get) {
    std::vector<std::string> row{label};
    bool any = false;
    for (const Fit* f : fits) {
      const std::optional<double> v = get(f->varcomp);
      row.push_back(v ? fixed3(*v) : "");
      any = any || v.has_value();
    }
    if (any) table.push_back(row);
  };
  vc_row("Var: person", [](const VarComp& v) { return v.person_var; });
  vc_row("Var: item location", [](const VarComp& v) { return v.item_var; });
  vc_row("Var: item treatment slope", [](const VarComp& v) { return v.zeta_var; });
  vc_row("Cov: location x slope", [](const VarComp& v) { return v.cov_b_zeta; });

  auto stat_row = [&](const std::string& label, auto get) {
    std::vector<std::string> row{label};
    for (const Fit* f : fits) row.push_back(get(*f));
    table.push_back(row);
  };
  stat_row("R^2", [](const Fit& f) {
    return f.spec.is_sum_score() ? fixed3(f.r_squared) : std::string();
  });
  stat_row("AIC", [](const Fit& f) { return fixed3(f.aic); });
  stat_row("BIC", [](const Fit& f) { return fixed3(f.bic); });
  stat_row("Log likelihood", [](const Fit& f) { return fixed3(f.loglik); });
  stat_row("Num. obs.", [](const Fit& f) { return std::to_string(f.n_obs); });
  stat_row("Converged", [](const Fit& f) { return std::string(f.converged ? "yes" : "no"); });

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t c = 0; c < table[r].size(); ++c) {
      const auto& cell = table[r][c];
      if (c == 0) {
        out << cell << std::string(width[c] - cell.size(), ' ');
      } else {
        out << "  " << std::string(width[c] - cell.size(), ' ') << cell;
      }
    }
    out << '\n';
    if (r == 0 || r == coef_rows.size()) {
      std::size_t total = width[0];
      for (std::size_t c = 1; c < width.size(); ++c) total += 2 + width[c];
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

std::string provenance_line(const RunConfig& config) {
  return "# ilhte " + config_to_json(config) + "\n";
}

}  // namespace ilhte
