#pragma once

// Simulation studies: per-replication fits of a constant-effect model and an
// item-slope model, with bias, SE calibration, coverage and interaction-bias
// summaries per condition.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ilhte/core.hpp"
#include "ilhte/dgp.hpp"
#include "ilhte/glmm.hpp"

namespace ilhte {

struct RepRecord {
  int rep = 0;
  bool converged = false;
  double beta1 = 0.0;
  double se_beta1 = 0.0;
  std::optional<double> beta3;     // treatment x baseline, when fitted
  std::optional<double> se_beta3;
  std::optional<double> sigma_zeta;
  std::string error;               // set when the fit threw
};

// Aggregates use converged replications only.
struct Aggregate {
  int n_reps = 0;
  int n_used = 0;
  double convergence_rate = 0.0;
  bool invalid = false;  // convergence below 90%

  double mean_estimate = 0.0;
  double bias = 0.0;
  double mc_se_bias = 0.0;
  double empirical_sd = 0.0;
  double mc_se_empirical_sd = 0.0;
  double mean_se = 0.0;
  double mc_se_mean_se = 0.0;
  double calibration = 0.0;  // mean SE / empirical SD
  double mc_se_calibration = 0.0;
  double sd_relative_se = 0.0;  // SD over reps of SE_r / empirical SD
  double coverage = 0.0;        // Wald 95% interval covers the true beta1
  double mc_se_coverage = 0.0;

  std::optional<double> interaction_bias;
  std::optional<double> mc_se_interaction_bias;
  std::optional<double> median_sigma_zeta;
};

struct ModelCell {
  ModelSpec spec;
  std::vector<RepRecord> reps;
  Aggregate summary;
};

struct CellResult {
  Condition condition;
  int condition_index = 0;  // position in the study's full grid
  std::vector<ModelCell> models;  // constant model, then item-slope model
};

/// Models fitted per replication: 2A and 2B for MAIN; the same pair with a
/// treatment x baseline term for RHO.
std::vector<ModelSpec> study_models(Study study);

/// Summary statistics of one model over a cell's replications.
Aggregate aggregate(const std::vector<RepRecord>& reps, double true_beta1,
                    double true_interaction);

struct RunOptions {
  int jobs = 1;
  std::uint64_t base_seed = 20240501;
  std::optional<int> n_reps;  // overrides the per-condition count
  FitOptions fit;
  // Called after each finished replication with (done, total); serialized.
  std::function<void(std::size_t, std::size_t)> progress;
};

using ConditionFilter = std::function<bool(const Condition&)>;

/// Conditions of the desk preset (see desk_grid).
bool in_desk_preset(const Condition& condition);

/// Runs every condition of the study's full grid accepted by `filter`.
/// Replication r of the condition at grid position c uses seeds derived from
/// (base_seed, c, r), so results do not depend on the worker count.
std::vector<CellResult> run_study(Study study, const ConditionFilter& filter,
                                  const RunOptions& options);

/// One replication: simulate, expand, fit each model.
std::vector<RepRecord> run_replication(const Condition& condition, int condition_index, int rep,
                                       std::uint64_t base_seed, const FitOptions& fit_options);

// Figure-style long tables. n_persons == 0 marks rows averaged over sample
// sizes.
struct SummaryRow {
  Study study = Study::Main;
  int k = 3;
  double sigma_zeta = 0.0;
  double rho = 0.0;
  int n_persons = 0;
  int n_items = 0;
  std::string model;
  double estimate = 0.0;
  double mc_se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int n_used = 0;
  int n_reps = 0;
  bool invalid = false;
};

/// Mean bias of beta1 with +/- 2 SD (across reps) bars.
std::vector<SummaryRow> bias_table(const std::vector<CellResult>& results);
/// SE calibration in percent with +/- 2 SD bars of the per-rep relative SE.
std::vector<SummaryRow> calibration_table(const std::vector<CellResult>& results);
/// Mean bias of the treatment x baseline coefficient with a 95% MC interval.
/// Cells without that coefficient are skipped.
std::vector<SummaryRow> interaction_bias_table(const std::vector<CellResult>& results);

/// Averages rows that differ only in n_persons.
std::vector<SummaryRow> average_over_sample_sizes(const std::vector<SummaryRow>& rows);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// One row per condition x model with every aggregate.
void write_cells_csv(std::ostream& out, const std::vector<CellResult>& results);
/// One row per condition x model x replication.
void write_reps_csv(std::ostream& out, const std::vector<CellResult>& results);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ilhte
