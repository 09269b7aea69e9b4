#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ilhte/glmm.hpp"
#include "ilhte/nelder_mead.hpp"

namespace ilhte {
namespace {

std::vector<double> default_start(int item_dim) {
  if (item_dim == 1) return {1.0, 1.0};
  return {1.0, 1.0, 0.0, 0.5};
}

std::vector<double> clamp_to(const std::vector<double>& theta, const std::vector<double>& lower,
                             double* violation) {
  std::vector<double> out = theta;
  double v = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k] < lower[k]) {
      v += (lower[k] - out[k]) * (lower[k] - out[k]);
      out[k] = lower[k];
    }
  }
  if (violation != nullptr) *violation = v;
  return out;
}

}  // namespace

Fit fit_glmm(const DesignMatrices& dm, const ModelSpec& spec, const FitOptions& options,
             OptimizerTrace* trace) {
  if (spec.is_sum_score()) throw ValidationError("fit_glmm: sum-score model requested");
  const int d = dm.item_dim;
  if (d != (spec.has_item_slopes() ? 2 : 1)) {
    throw ValidationError("fit_glmm: design does not match the model kind");
  }

  LaplaceEngine engine(dm, options.inner);
  const std::size_t full_size = VarianceStructure::theta_size(d);
  // With a slope covariate that is zero on every row the likelihood does not
  // depend on the slope part of the item factor; pin it at zero so the
  // simplex does not wander along a flat direction.
  const bool slope_free = d == 2 && dm.slope.cwiseAbs().maxCoeff() > 0.0;
  const std::size_t n_free = d == 2 && !slope_free ? 2 : full_size;
  auto expand_theta = [&](const std::vector<double>& reduced) {
    std::vector<double> full(full_size, 0.0);
    std::copy(reduced.begin(), reduced.end(), full.begin());
    return full;
  };
  std::vector<double> lower = VarianceStructure::lower_bounds(d);
  lower.resize(n_free);
  constexpr double kBoxPenalty = 1e4;

  int total_evals = 0;
  auto objective = [&](const std::vector<double>& theta) {
    ++total_evals;
    double violation = 0.0;
    const auto inside = expand_theta(clamp_to(theta, lower, &violation));
    try {
      const auto res = engine.solve(VarianceStructure::from_theta(inside, d));
      return res.laplace_deviance() + kBoxPenalty * violation;
    } catch (const std::runtime_error&) {
      engine.reset();
      return std::numeric_limits<double>::infinity();
    }
  };

  NelderMeadOptions nm;
  nm.f_tolerance = options.outer_tolerance;
  nm.x_tolerance = options.theta_tolerance;
  nm.max_evaluations = options.max_evaluations;

  std::vector<double> start = default_start(d);
  start.resize(n_free);
  std::vector<double> steps(n_free, 0.25);
  auto best = nelder_mead(objective, start, steps, nm);
  std::vector<double> best_trace = best.best_trace;
  bool nm_converged = best.converged;
  int restarts_used = 0;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  for (int r = 0; r < options.restarts; ++r) {
    const int remaining = options.max_evaluations - total_evals;
    if (remaining <= static_cast<int>(steps.size()) + 1) break;
    std::vector<double> restart_steps(steps.size());
    for (std::size_t k = 0; k < steps.size(); ++k) {
      restart_steps[k] = 0.05 * jitter(rng) * std::max(0.5, std::abs(best.x[k]));
    }
    nm.max_evaluations = remaining;
    auto again = nelder_mead(objective, best.x, restart_steps, nm);
    ++restarts_used;
    for (double v : again.best_trace) best_trace.push_back(std::min(v, best_trace.back()));
    const double gain = best.value - again.value;
    if (again.value < best.value) {
      nm_converged = again.converged;
      best = std::move(again);
    }
    if (gain <= options.outer_tolerance * std::abs(best.value)) break;
  }

  const auto theta_hat = expand_theta(clamp_to(best.x, lower, nullptr));
  const VarianceStructure vs = VarianceStructure::from_theta(theta_hat, d);
  const PirlsResult res = engine.solve(vs);

  Fit fit;
  fit.spec = spec;
  fit.item_ids = dm.item_ids;
  fit.person_ids = dm.person_ids;
  fit.theta = theta_hat;
  fit.fixed_cov = res.fixed_cov;
  for (int c = 0; c < dm.n_fixed(); ++c) {
    fit.fixed.push_back({dm.column_names[static_cast<std::size_t>(c)], res.beta(c),
                         std::sqrt(res.fixed_cov(c, c))});
  }
  fit.varcomp = vs.to_varcomp();

  // Conditional covariance of the spherical item effects: inverse of the
  // leading Schur block.
  const int np = dm.n_persons();
  const int q = d * dm.n_items();
  const Eigen::MatrixXd lww = res.factor.schur_lower.topLeftCorner(q, q);
  const Eigen::MatrixXd lww_inv =
      lww.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(q, q));
  for (int i = 0; i < dm.n_items(); ++i) {
    ItemEffect e;
    e.item_id = dm.item_ids[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd blk = lww_inv.middleCols(d * i, d).transpose() * lww_inv.middleCols(d * i, d);
    if (d == 1) {
      e.b = res.b(np + i);
      e.sd_b = vs.item_factor(0, 0) * std::sqrt(blk(0, 0));
    } else {
      e.b = res.b(np + 2 * i);
      e.zeta = res.b(np + 2 * i + 1);
      const Eigen::Matrix2d lf = vs.item_factor.triangularView<Eigen::Lower>();
      const Eigen::Matrix2d cov = lf * blk * lf.transpose();
      e.sd_b = std::sqrt(std::max(0.0, cov(0, 0)));
      e.sd_zeta = std::sqrt(std::max(0.0, cov(1, 1)));
    }
    fit.eb_items.push_back(e);
  }

  fit.n_obs = static_cast<std::size_t>(dm.n_rows());
  fit.n_variance_params = n_free;
  fit.loglik = -0.5 * res.laplace_deviance();
  const double k_params = static_cast<double>(dm.n_fixed() + n_free);
  fit.aic = -2.0 * fit.loglik + 2.0 * k_params;
  fit.bic = -2.0 * fit.loglik + std::log(static_cast<double>(fit.n_obs)) * k_params;
  fit.converged = nm_converged && res.converged;
  fit.n_evaluations = total_evals;

  std::ostringstream msg;
  msg << "nelder-mead " << (nm_converged ? "converged" : "stopped") << " after " << total_evals
      << " evaluations (" << restarts_used << " restarts); pirls "
      << (res.converged ? "converged" : "did not converge");
  if (res.separation) msg << "; warning: |eta| > 30 at the modes (possible separation)";
  fit.message = msg.str();

  if (trace != nullptr) {
    trace->best_values = std::move(best_trace);
    trace->evaluations = total_evals;
    trace->restarts_used = restarts_used;
    trace->converged = fit.converged;
  }
  return fit;
}

Fit fit_glmm(const BinaryTable& bt, const ModelSpec& spec, const FitOptions& options,
             OptimizerTrace* trace) {
  const DesignMatrices dm = build_design(bt, spec);
  return fit_glmm(dm, spec, options, trace);
}

std::vector<ItemTreatmentEffect> eb_item_effects(const Fit& fit) {
  if (!fit.spec.has_item_slopes()) {
    throw ValidationError("eb_item_effects: model has no item treatment slopes");
  }
  const double beta1 = fit.coef(names::kTreatment).estimate;
  std::vector<ItemTreatmentEffect> out;
  out.reserve(fit.eb_items.size());
  for (const auto& e : fit.eb_items) {
    out.push_back({e.item_id, e.b, beta1 + e.zeta, e.zeta});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  return out;
}

}  // namespace ilhte
