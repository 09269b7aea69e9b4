#include "ilhte/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>
#include <tuple>

#include "ilhte/csv.hpp"
#include "ilhte/expand.hpp"

namespace ilhte {
namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string model_name(const ModelSpec& spec) {
  std::string s = model_label(spec.kind);
  if (spec.include_tx_by_baseline) s += "+TxX";
  return s;
}

SummaryRow row_head(const CellResult& cell, const ModelCell& m) {
  SummaryRow r;
  r.study = cell.condition.study;
  r.k = cell.condition.k;
  r.sigma_zeta = cell.condition.sigma_zeta;
  r.rho = cell.condition.rho;
  r.n_persons = cell.condition.n_persons;
  r.n_items = cell.condition.n_items;
  r.model = model_name(m.spec);
  r.n_used = m.summary.n_used;
  r.n_reps = m.summary.n_reps;
  r.invalid = m.summary.invalid;
  return r;
}

}  // namespace

std::vector<ModelSpec> study_models(Study study) {
  ModelSpec constant;
  constant.kind = ModelKind::RsmConstant;
  ModelSpec ilhte;
  ilhte.kind = ModelKind::RsmIlhte;
  if (study == Study::Rho) {
    constant.include_tx_by_baseline = true;
    ilhte.include_tx_by_baseline = true;
  }
  return {constant, ilhte};
}

Aggregate aggregate(const std::vector<RepRecord>& reps, double true_beta1,
                    double true_interaction) {
  Aggregate a;
  a.n_reps = static_cast<int>(reps.size());
  std::vector<double> est;
  std::vector<double> se;
  std::vector<double> b3;
  std::vector<double> sz;
  int covered = 0;
  for (const auto& r : reps) {
    if (!r.converged) continue;
    est.push_back(r.beta1);
    se.push_back(r.se_beta1);
    if (r.beta3) b3.push_back(*r.beta3);
    if (r.sigma_zeta) sz.push_back(*r.sigma_zeta);
    if (std::abs(r.beta1 - true_beta1) <= 1.96 * r.se_beta1) ++covered;
  }
  a.n_used = static_cast<int>(est.size());
  a.convergence_rate = a.n_reps > 0 ? static_cast<double>(a.n_used) / a.n_reps : 0.0;
  a.invalid = a.convergence_rate < 0.9;
  if (a.n_used == 0) return a;

  const double n = static_cast<double>(a.n_used);
  a.mean_estimate = mean_of(est);
  a.bias = a.mean_estimate - true_beta1;
  a.empirical_sd = sd_of(est);
  a.mc_se_bias = a.empirical_sd / std::sqrt(n);
  a.mc_se_empirical_sd = a.n_used > 1 ? a.empirical_sd / std::sqrt(2.0 * (n - 1.0)) : 0.0;
  a.mean_se = mean_of(se);
  a.mc_se_mean_se = sd_of(se) / std::sqrt(n);
  if (a.empirical_sd > 0.0) {
    a.calibration = a.mean_se / a.empirical_sd;
    // Delta method on the ratio, treating the two means as independent.
    const double r1 = a.mean_se > 0.0 ? a.mc_se_mean_se / a.mean_se : 0.0;
    const double r2 = a.mc_se_empirical_sd / a.empirical_sd;
    a.mc_se_calibration = a.calibration * std::sqrt(r1 * r1 + r2 * r2);
    std::vector<double> rel(se.size());
    for (std::size_t i = 0; i < se.size(); ++i) rel[i] = se[i] / a.empirical_sd;
    a.sd_relative_se = sd_of(rel);
  }
  a.coverage = covered / n;
  a.mc_se_coverage = std::sqrt(a.coverage * (1.0 - a.coverage) / n);
  if (!b3.empty()) {
    a.interaction_bias = mean_of(b3) - true_interaction;
    a.mc_se_interaction_bias = sd_of(b3) / std::sqrt(static_cast<double>(b3.size()));
  }
  if (!sz.empty()) a.median_sigma_zeta = median_of(sz);
  return a;
}

bool in_desk_preset(const Condition& c) {
  if (c.k != 3) return false;
  if (c.n_persons != 300 && c.n_persons != 1000) return false;
  if (c.n_items != 8 && c.n_items != 20) return false;
  if (c.study == Study::Rho) {
    const double r = c.rho;
    return r == -1.0 || r == -0.5 || r == 0.0 || r == 0.5 || r == 1.0;
  }
  return true;
}

std::vector<RepRecord> run_replication(const Condition& condition, int condition_index, int rep,
                                       std::uint64_t base_seed, const FitOptions& fit_options) {
  const std::uint64_t seed = derive_seed(base_seed, static_cast<std::uint64_t>(condition_index),
                                         static_cast<std::uint64_t>(rep));
  const TrueParams params = draw_true_params(condition, derive_seed(seed, 1));
  const LongTable table = simulate_dataset(params, condition.n_persons, condition.n_items,
                                           condition.k, derive_seed(seed, 2));
  const BinaryTable bt = expand_adjacent(table, Expansion::Rsm);

  std::vector<RepRecord> out;
  for (const auto& spec : study_models(condition.study)) {
    RepRecord rec;
    rec.rep = rep;
    try {
      const Fit fit = fit_glmm(bt, spec, fit_options);
      rec.converged = fit.converged;
      const auto& b1 = fit.coef(names::kTreatment);
      rec.beta1 = b1.estimate;
      rec.se_beta1 = b1.se;
      if (const auto* b3 = fit.find(names::kTxByBaseline)) {
        rec.beta3 = b3->estimate;
        rec.se_beta3 = b3->se;
      }
      if (fit.varcomp.zeta_var) rec.sigma_zeta = std::sqrt(*fit.varcomp.zeta_var);
      if (!std::isfinite(rec.beta1) || !std::isfinite(rec.se_beta1)) rec.converged = false;
    } catch (const std::exception& e) {
      rec.converged = false;
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CellResult> run_study(Study study, const ConditionFilter& filter,
                                  const RunOptions& options) {
  const auto grid = condition_grid(study);
  const auto models = study_models(study);
  std::vector<CellResult> cells;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (filter && !filter(grid[c])) continue;
    CellResult cell;
    cell.condition = grid[c];
    cell.condition.base_seed = options.base_seed;
    if (options.n_reps) cell.condition.n_reps = *options.n_reps;
    cell.condition_index = static_cast<int>(c);
    for (const auto& spec : models) {
      ModelCell m;
      m.spec = spec;
      m.reps.resize(static_cast<std::size_t>(cell.condition.n_reps));
      cell.models.push_back(std::move(m));
    }
    cells.push_back(std::move(cell));
  }

  // Flat task list; every task writes only its own slots.
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (int r = 0; r < cells[i].condition.n_reps; ++r) tasks.emplace_back(i, r);
  }
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      auto& cell = cells[tasks[t].first];
      const int rep = tasks[t].second;
      auto recs = run_replication(cell.condition, cell.condition_index, rep, options.base_seed,
                                  options.fit);
      for (std::size_t m = 0; m < recs.size(); ++m) {
        cell.models[m].reps[static_cast<std::size_t>(rep)] = std::move(recs[m]);
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        options.progress(d, tasks.size());
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (auto& cell : cells) {
    // Fixed effects do not depend on the item draw.
    const TrueParams truth = draw_true_params(cell.condition, 0);
    for (auto& m : cell.models) m.summary = aggregate(m.reps, truth.beta1, truth.beta_interact);
  }
  return cells;
}

std::vector<SummaryRow> bias_table(const std::vector<CellResult>& results) {
  std::vector<SummaryRow> out;
  for (const auto& cell : results) {
    for (const auto& m : cell.models) {
      SummaryRow r = row_head(cell, m);
      r.estimate = m.summary.bias;
      r.mc_se = m.summary.mc_se_bias;
      r.lo = r.estimate - 2.0 * m.summary.empirical_sd;
      r.hi = r.estimate + 2.0 * m.summary.empirical_sd;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<SummaryRow> calibration_table(const std::vector<CellResult>& results) {
  std::vector<SummaryRow> out;
  for (const auto& cell : results) {
    for (const auto& m : cell.models) {
      SummaryRow r = row_head(cell, m);
      r.estimate = 100.0 * m.summary.calibration;
      r.mc_se = 100.0 * m.summary.mc_se_calibration;
      r.lo = r.estimate - 200.0 * m.summary.sd_relative_se;
      r.hi = r.estimate + 200.0 * m.summary.sd_relative_se;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<SummaryRow> interaction_bias_table(const std::vector<CellResult>& results) {
  std::vector<SummaryRow> out;
  for (const auto& cell : results) {
    for (const auto& m : cell.models) {
      if (!m.summary.interaction_bias) continue;
      SummaryRow r = row_head(cell, m);
      r.estimate = *m.summary.interaction_bias;
      r.mc_se = *m.summary.mc_se_interaction_bias;
      r.lo = r.estimate - 1.96 * r.mc_se;
      r.hi = r.estimate + 1.96 * r.mc_se;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<SummaryRow> average_over_sample_sizes(const std::vector<SummaryRow>& rows) {
  using Key = std::tuple<int, int, double, double, int, std::string>;
  std::map<Key, std::vector<const SummaryRow*>> groups;
  std::vector<Key> order;
  for (const auto& r : rows) {
    Key key{static_cast<int>(r.study), r.k, r.sigma_zeta, r.rho, r.n_items, r.model};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    SummaryRow a = *g.front();
    a.n_persons = 0;
    a.estimate = a.lo = a.hi = 0.0;
    double var = 0.0;
    a.n_used = a.n_reps = 0;
    a.invalid = false;
    for (const auto* r : g) {
      a.estimate += r->estimate;
      a.lo += r->lo;
      a.hi += r->hi;
      var += r->mc_se * r->mc_se;
      a.n_used += r->n_used;
      a.n_reps += r->n_reps;
      a.invalid = a.invalid || r->invalid;
    }
    const double m = static_cast<double>(g.size());
    a.estimate /= m;
    a.lo /= m;
    a.hi /= m;
    a.mc_se = std::sqrt(var) / m;
    out.push_back(a);
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "study,k,sigma_zeta,rho,n_persons,n_items,model,estimate,mc_se,lo,hi,n_used,n_reps,"
         "invalid\n";
  for (const auto& r : rows) {
    out << study_label(r.study) << ',' << r.k << ',' << format_real(r.sigma_zeta) << ','
        << format_real(r.rho) << ',' << (r.n_persons == 0 ? std::string("avg")
                                                            : std::to_string(r.n_persons))
        << ',' << r.n_items << ',' << r.model << ',' << format_real(r.estimate) << ','
        << format_real(r.mc_se) << ',' << format_real(r.lo) << ',' << format_real(r.hi) << ','
        << r.n_used << ',' << r.n_reps << ',' << (r.invalid ? 1 : 0) << '\n';
  }
}

void write_cells_csv(std::ostream& out, const std::vector<CellResult>& results) {
  out << "condition_index,study,k,sigma_zeta,rho,n_persons,n_items,model,n_reps,n_used,"
         "convergence_rate,invalid,mean_beta1,bias,mc_se_bias,empirical_sd,mc_se_empirical_sd,"
         "mean_se,mc_se_mean_se,calibration,mc_se_calibration,coverage,mc_se_coverage,"
         "interaction_bias,mc_se_interaction_bias,median_sigma_zeta\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& cell : results) {
    const auto& c = cell.condition;
    for (const auto& m : cell.models) {
      const auto& a = m.summary;
      out << cell.condition_index << ',' << study_label(c.study) << ',' << c.k << ','
          << format_real(c.sigma_zeta) << ',' << format_real(c.rho) << ',' << c.n_persons << ','
          << c.n_items << ',' << model_name(m.spec) << ',' << a.n_reps << ',' << a.n_used << ','
          << format_real(a.convergence_rate) << ',' << (a.invalid ? 1 : 0) << ','
          << format_real(a.mean_estimate) << ',' << format_real(a.bias) << ','
          << format_real(a.mc_se_bias) << ',' << format_real(a.empirical_sd) << ','
          << format_real(a.mc_se_empirical_sd) << ',' << format_real(a.mean_se) << ','
          << format_real(a.mc_se_mean_se) << ',' << format_real(a.calibration) << ','
          << format_real(a.mc_se_calibration) << ',' << format_real(a.coverage) << ','
          << format_real(a.mc_se_coverage) << ',' << opt(a.interaction_bias) << ','
          << opt(a.mc_se_interaction_bias) << ',' << opt(a.median_sigma_zeta) << '\n';
    }
  }
}

void write_reps_csv(std::ostream& out, const std::vector<CellResult>& results) {
  out << "condition_index,model,rep,converged,beta1,se_beta1,beta3,se_beta3,sigma_zeta,error\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& cell : results) {
    for (const auto& m : cell.models) {
      for (const auto& r : m.reps) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << cell.condition_index << ',' << model_name(m.spec) << ',' << r.rep << ','
            << (r.converged ? 1 : 0) << ',' << format_real(r.beta1) << ','
            << format_real(r.se_beta1) << ',' << opt(r.beta3) << ',' << opt(r.se_beta3) << ','
            << opt(r.sigma_zeta) << ',' << err << '\n';
      }
    }
  }
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("spearman: need two equal-length samples of size >= 2");
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace ilhte
