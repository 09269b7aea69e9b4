// ilhte command-line tool: simulate, fit, mc-run, report, hdrs-sim.
//
// Exit codes: 0 success, 1 validation or input error, 2 fit did not converge.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ilhte/config.hpp"
#include "ilhte/csv.hpp"
#include "ilhte/dgp.hpp"
#include "ilhte/expand.hpp"
#include "ilhte/inference.hpp"
#include "ilhte/montecarlo.hpp"
#include "ilhte/pipeline.hpp"
#include "ilhte/results_io.hpp"

namespace fs = std::filesystem;
using namespace ilhte;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNotConverged = 2;

// Options shared by every subcommand that takes a config file. Flags that
// were given on the command line override values from the file.
struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

RunConfig resolve(const Common& common) {
  RunConfig c = default_config();
  if (!common.config_path.empty()) c = load_config(common.config_path, c);
  if (common.seed) c.seed = *common.seed;
  if (common.out) c.out = *common.out;
  return c;
}

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--config", common.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", common.seed, "Base seed (overrides the config)");
}

std::ofstream open_output(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  return out;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + suffix)).string();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string study = "main";
  int condition = 0;
  int rep = 0;
  std::string items_out;
  std::string params_out;
};

int run_simulate(const SimulateArgs& a) {
  RunConfig config = resolve(a.common);
  config.study = a.study;
  check_config(config);
  if (config.out.empty()) throw ValidationError("simulate: --out is required");
  const Study study = parse_study(a.study);
  const auto grid = condition_grid(study);
  if (a.condition < 0 || a.condition >= static_cast<int>(grid.size())) {
    throw ValidationError("simulate: --condition must be in [0, " + std::to_string(grid.size()) +
                          ")");
  }
  if (a.rep < 0) throw ValidationError("simulate: --rep must be >= 0");
  const Condition& cond = grid[static_cast<std::size_t>(a.condition)];
  // Same seed chain as replication `rep` of this condition in mc-run.
  const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(a.condition),
                                         static_cast<std::uint64_t>(a.rep));
  const TrueParams params = draw_true_params(cond, derive_seed(seed, 1));
  const LongTable table =
      simulate_dataset(params, cond.n_persons, cond.n_items, cond.k, derive_seed(seed, 2));

  const std::string items_path = a.items_out.empty() ? sibling(config.out, ".items.csv") : a.items_out;
  const std::string params_path =
      a.params_out.empty() ? sibling(config.out, ".params.json") : a.params_out;
  {
    auto out = open_output(config.out);
    out << provenance_line(config);
    write_long_csv(out, table);
  }
  {
    auto out = open_output(items_path);
    out << provenance_line(config);
    write_items_csv(out, table.items());
  }
  {
    auto out = open_output(params_path);
    out << params_to_json(params, config,
                          {{"study", a.study},
                           {"condition", std::to_string(a.condition)},
                           {"rep", std::to_string(a.rep)},
                           {"n_persons", std::to_string(cond.n_persons)},
                           {"n_items", std::to_string(cond.n_items)},
                           {"k", std::to_string(cond.k)}});
  }
  std::cout << "wrote " << config.out << " (" << table.rows().size() << " responses), "
            << items_path << ", " << params_path << "\n";
  return kExitOk;
}

// fit -----------------------------------------------------------------------

struct FitArgs {
  Common common;
  std::string model = "2B";
  std::optional<std::string> expansion;
  bool tx_by_baseline = false;
  std::string dump_expanded;
  std::string data;
  std::string items;
};

int run_fit(const FitArgs& a) {
  RunConfig config = resolve(a.common);
  if (a.expansion) config.expansion = *a.expansion;
  check_config(config);
  const auto items = read_items_csv_file(a.items);
  const LongTable table = read_long_csv_file(a.data, items);

  ModelSpec spec;
  spec.kind = parse_model_label(a.model);
  spec.expansion = parse_expansion(config.expansion);
  spec.include_tx_by_baseline = a.tx_by_baseline;
  if (spec.is_sum_score() && a.tx_by_baseline) {
    throw ValidationError("fit: --tx-by-baseline applies to 2A/2B/2C; use --model 1B");
  }

  if (!a.dump_expanded.empty()) {
    const BinaryTable bt = expand_adjacent(table, spec.expansion);
    auto out = open_output(a.dump_expanded);
    out << provenance_line(config);
    write_binary_csv(out, bt);
  }

  const Fit fit = fit_model(table, spec, fit_options(config));
  std::cout << format_fit_table({&fit});
  std::cout << fit.message << "\n";
  if (!config.out.empty()) {
    auto out = open_output(config.out);
    out << fit_to_json(fit, config, {{"data", a.data}, {"items", a.items}});
  }
  if (!fit.converged) {
    std::cerr << "fit did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// mc-run --------------------------------------------------------------------

struct McArgs {
  Common common;
  std::optional<std::string> study;
  std::optional<std::string> preset;
  std::optional<int> jobs;
  std::optional<int> n_reps;
  bool quiet = false;
};

void write_table(const std::string& path, const RunConfig& config,
                 const std::vector<SummaryRow>& rows) {
  auto out = open_output(path);
  out << provenance_line(config);
  write_summary_csv(out, rows);
}

int run_mc(const McArgs& a) {
  RunConfig config = resolve(a.common);
  if (a.study) config.study = *a.study;
  if (a.preset) config.preset = *a.preset;
  if (a.jobs) config.jobs = *a.jobs;
  if (a.n_reps) config.n_reps = *a.n_reps;
  check_config(config);
  if (config.out.empty()) throw ValidationError("mc-run: --out directory is required");
  fs::create_directories(config.out);

  const Study study = parse_study(config.study);
  RunOptions opts;
  opts.jobs = config.jobs;
  opts.base_seed = config.seed;
  opts.n_reps = config.n_reps;
  opts.fit = fit_options(config);
  if (!a.quiet) {
    opts.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 25 == 0) {
        std::cerr << "\rreplications " << done << "/" << total << std::flush;
        if (done == total) std::cerr << "\n";
      }
    };
  }
  ConditionFilter filter;
  if (config.preset == "desk") filter = in_desk_preset;
  const auto results = run_study(study, filter, opts);

  const fs::path dir(config.out);
  {
    auto out = open_output((dir / "cells.csv").string());
    out << provenance_line(config);
    write_cells_csv(out, results);
  }
  {
    auto out = open_output((dir / "reps.csv").string());
    out << provenance_line(config);
    write_reps_csv(out, results);
  }
  const auto bias = bias_table(results);
  const auto calib = calibration_table(results);
  write_table((dir / "fig2_bias.csv").string(), config, bias);
  write_table((dir / "fig2_bias_avg.csv").string(), config, average_over_sample_sizes(bias));
  write_table((dir / "fig3_calibration.csv").string(), config, calib);
  write_table((dir / "fig3_calibration_avg.csv").string(), config,
              average_over_sample_sizes(calib));
  const auto inter = interaction_bias_table(results);
  if (!inter.empty()) {
    write_table((dir / "fig4_interaction_bias.csv").string(), config, inter);
    write_table((dir / "fig4_interaction_bias_avg.csv").string(), config,
                average_over_sample_sizes(inter));
  }

  int invalid = 0;
  for (const auto& cell : results) {
    for (const auto& m : cell.models) invalid += m.summary.invalid ? 1 : 0;
  }
  std::cout << results.size() << " conditions written to " << config.out;
  if (invalid > 0) std::cout << " (" << invalid << " cell-models below 90% convergence)";
  std::cout << "\n";
  return kExitOk;
}

// report --------------------------------------------------------------------

struct ReportArgs {
  std::string fit0;
  std::string fit1;
  std::string out_dir;
};

int run_report(const ReportArgs& a) {
  std::vector<FitRecord> recs;
  recs.push_back(read_fit_file(a.fit0));
  if (!a.fit1.empty()) recs.push_back(read_fit_file(a.fit1));
  std::vector<const Fit*> fits;
  for (const auto& r : recs) fits.push_back(&r.fit);
  std::cout << format_fit_table(fits) << "\n";

  const Fit& f0 = recs.front().fit;
  const Fit* slope_fit = nullptr;
  for (const Fit* f : fits) {
    if (f->varcomp.zeta_var) {
      slope_fit = f;
      break;
    }
  }
  if (recs.size() == 2) {
    const Fit& f1 = recs[1].fit;
    if (f0.find(names::kTreatment) && f1.find(names::kTreatment) &&
        f0.coef(names::kTreatment).se > 0.0) {
      const auto si = se_inflation(f0, f1);
      std::cout << "SE ratio (fit1/fit0): " << fmt(si.ratio)
                << "  effective sample size factor: " << fmt(si.effective_n_factor) << "\n";
    }
    if (f0.varcomp.zeta_var && f1.varcomp.zeta_var) {
      if (*f0.varcomp.zeta_var > 0.0) {
        const auto r2 = pseudo_r2(*f0.varcomp.zeta_var, *f1.varcomp.zeta_var);
        std::cout << "Pseudo-R^2 of slope variance: " << fmt(r2.value)
                  << (r2.negative ? "  (negative: fit1 has more slope variance)" : "") << "\n";
      } else {
        std::cout << "Pseudo-R^2 of slope variance: n/a (fit0 slope variance is 0)\n";
      }
    } else {
      std::cout << "Pseudo-R^2 of slope variance: n/a (needs two item-slope fits)\n";
    }
  }
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const Fit& f = *fits[i];
    if (!f.varcomp.zeta_var) continue;
    const auto pi = prediction_interval(f);
    std::cout << "fit" << i << " (" << model_label(f.spec.kind) << ") prediction interval: ["
              << fmt(pi.lo) << ", " << fmt(pi.hi) << "]";
    if (const auto rho = rho_hat(f)) {
      std::cout << "  rho: " << fmt(*rho);
    } else {
      std::cout << "  rho: NA";
    }
    std::cout << "\n";
  }

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    // Carry the configuration each fit was produced with.
    std::string provenance = "# ilhte report fit0=" + a.fit0 +
                             (a.fit1.empty() ? "" : " fit1=" + a.fit1) + "\n";
    for (std::size_t i = 0; i < recs.size(); ++i) {
      provenance += "# ilhte fit" + std::to_string(i) + " " + recs[i].config_json + "\n";
    }
    if (slope_fit != nullptr) {
      auto out = open_output((dir / "item_effects.csv").string());
      out << provenance;
      out << "model,item_id,location,total_effect,zeta,sd_b,sd_zeta\n";
      for (const Fit* f : fits) {
        if (!f->varcomp.zeta_var) continue;
        // Average effect plus the item's predicted deviation. For 2C the
        // subscale shift is not added since the fit does not carry item flags.
        const double b1 = f->coef(names::kTreatment).estimate;
        for (const auto& e : f->eb_items) {
          const double total = b1 + e.zeta;
          out << model_label(f->spec.kind) << ',' << e.item_id << ',' << format_real(e.b) << ','
              << format_real(total) << ',' << format_real(e.zeta) << ',' << format_real(e.sd_b)
              << ',' << format_real(e.sd_zeta) << '\n';
        }
      }
    }
    for (const Fit* f : fits) {
      if (f->spec.kind != ModelKind::RsmSubscale) continue;
      auto out = open_output((dir / "subscale_logit_curves.csv").string());
      out << provenance;
      out << "baseline,treatment,subscale,log_odds\n";
      for (const auto& p : subscale_logit_curves(*f)) {
        out << format_real(p.baseline) << ',' << p.treatment << ',' << p.subscale << ','
            << format_real(p.log_odds) << '\n';
      }
      break;
    }
    std::cout << "plot data written to " << a.out_dir << "\n";
  }
  return kExitOk;
}

// hdrs-sim ------------------------------------------------------------------

struct HdrsArgs {
  Common common;
  std::optional<int> n_persons;
  std::string preset = "ilhte";
  std::string items_out;
  std::string params_out;
};

int run_hdrs(const HdrsArgs& a) {
  RunConfig config = resolve(a.common);
  if (a.n_persons) config.n_persons = *a.n_persons;
  check_config(config);
  if (config.out.empty()) throw ValidationError("hdrs-sim: --out is required");
  TrueParams params;
  if (a.preset == "ilhte") {
    params = hdrs_params_ilhte();
  } else if (a.preset == "subscale") {
    params = hdrs_params_subscale();
  } else {
    throw ValidationError("hdrs-sim: --preset must be ilhte or subscale");
  }
  TrueParams realized;
  const LongTable table = simulate_hdrs_like(config.n_persons, params, config.seed, &realized);
  const std::string items_path = a.items_out.empty() ? sibling(config.out, ".items.csv") : a.items_out;
  const std::string params_path =
      a.params_out.empty() ? sibling(config.out, ".params.json") : a.params_out;
  {
    auto out = open_output(config.out);
    out << provenance_line(config);
    write_long_csv(out, table);
  }
  {
    auto out = open_output(items_path);
    out << provenance_line(config);
    write_items_csv(out, table.items());
  }
  {
    auto out = open_output(params_path);
    out << params_to_json(realized, config, {{"preset", a.preset}});
  }
  std::cout << "wrote " << config.out << " (" << table.rows().size() << " responses), "
            << items_path << ", " << params_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Item-level heterogeneous treatment effects: simulation and estimation"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate one data set from a study condition");
  add_common(s, sim.common);
  s->add_option("--study", sim.study, "main or rho")->check(CLI::IsMember({"main", "rho"}));
  s->add_option("--condition", sim.condition, "Index into the study's full condition grid");
  s->add_option("--rep", sim.rep, "Replication index (matches mc-run seeding)");
  s->add_option("--out", sim.common.out, "Long-format CSV output")->required();
  s->add_option("--items-out", sim.items_out, "Item metadata CSV (default: <out>.items.csv)");
  s->add_option("--params-out", sim.params_out, "Parameter sidecar (default: <out>.params.json)");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a sum-score or rating scale model");
  add_common(f, fit.common);
  f->add_option("--model", fit.model, "1A, 1B, 2A, 2B or 2C")
      ->check(CLI::IsMember({"1A", "1B", "2A", "2B", "2C"}));
  f->add_option("--expansion", fit.expansion, "rsm or pcm")->check(CLI::IsMember({"rsm", "pcm"}));
  f->add_flag("--tx-by-baseline", fit.tx_by_baseline, "Add a treatment x baseline term");
  f->add_option("--dump-expanded", fit.dump_expanded, "Write the pseudo-binary rows to CSV");
  f->add_option("--data", fit.data, "Long-format response CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--items", fit.items, "Item metadata CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--out", fit.common.out, "Machine-readable fit result (JSON)");

  McArgs mc;
  auto* m = app.add_subcommand("mc-run", "Run a simulation study");
  add_common(m, mc.common);
  m->add_option("--study", mc.study, "main or rho")->check(CLI::IsMember({"main", "rho"}));
  m->add_option("--preset", mc.preset, "desk or full")->check(CLI::IsMember({"desk", "full"}));
  m->add_option("--jobs", mc.jobs, "Worker threads (default: ILHTE_JOBS or 1)")
      ->check(CLI::PositiveNumber);
  m->add_option("--n-reps", mc.n_reps, "Replications per condition")->check(CLI::PositiveNumber);
  m->add_option("--out", mc.common.out, "Output directory");
  m->add_flag("--quiet", mc.quiet, "No progress output");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Post-fit summaries from one or two fit files");
  r->add_option("--fit0", rep.fit0, "Reference fit (e.g. 2A or 2B)")->required()->check(CLI::ExistingFile);
  r->add_option("--fit1", rep.fit1, "Comparison fit (e.g. 2B or 2C)")->check(CLI::ExistingFile);
  r->add_option("--out-dir", rep.out_dir, "Directory for plot data files");

  HdrsArgs hdrs;
  auto* h = app.add_subcommand("hdrs-sim", "Simulate an HDRS-17-like data set");
  add_common(h, hdrs.common);
  h->add_option("--n-persons", hdrs.n_persons, "Number of persons")->check(CLI::PositiveNumber);
  h->add_option("--preset", hdrs.preset, "ilhte or subscale")
      ->check(CLI::IsMember({"ilhte", "subscale"}));
  h->add_option("--out", hdrs.common.out, "Long-format CSV output")->required();
  h->add_option("--items-out", hdrs.items_out, "Item metadata CSV (default: <out>.items.csv)");
  h->add_option("--params-out", hdrs.params_out, "Parameter sidecar (default: <out>.params.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (s->parsed()) return run_simulate(sim);
    if (f->parsed()) return run_fit(fit);
    if (m->parsed()) return run_mc(mc);
    if (r->parsed()) return run_report(rep);
    if (h->parsed()) return run_hdrs(hdrs);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
