#include "ilhte/inference.hpp"

#include <cmath>

namespace ilhte {

Interval prediction_interval(double beta1, double var_beta1, double sigma_zeta_sq) {
  if (var_beta1 < 0.0 || sigma_zeta_sq < 0.0) {
    throw ValidationError("prediction_interval: variances must be non-negative");
  }
  const double half = 1.96 * std::sqrt(sigma_zeta_sq + var_beta1);
  return {beta1 - half, beta1 + half};
}

PseudoR2 pseudo_r2(double sigma_zeta_sq_0, double sigma_zeta_sq_1) {
  if (!(sigma_zeta_sq_0 > 0.0)) {
    throw ValidationError("pseudo_r2: unconditional slope variance must be positive");
  }
  PseudoR2 out;
  out.value = (sigma_zeta_sq_0 - sigma_zeta_sq_1) / sigma_zeta_sq_0;
  out.negative = out.value < 0.0;
  return out;
}

std::optional<double> rho_from_varcomp(double cov, double var_b, double var_zeta) {
  if (var_b < 0.0 || var_zeta < 0.0) {
    throw ValidationError("rho_from_varcomp: variances must be non-negative");
  }
  if (var_b == 0.0 || var_zeta == 0.0) return std::nullopt;
  return cov / std::sqrt(var_b * var_zeta);
}

SeInflation se_inflation(double se_constant, double se_ilhte) {
  if (!(se_constant > 0.0)) throw ValidationError("se_inflation: constant-model SE must be positive");
  SeInflation out;
  out.ratio = se_ilhte / se_constant;
  out.effective_n_factor = out.ratio * out.ratio;
  return out;
}

SeInflation se_inflation(const Fit& constant, const Fit& ilhte) {
  return se_inflation(constant.coef(names::kTreatment).se, ilhte.coef(names::kTreatment).se);
}

Interval prediction_interval(const Fit& ilhte) {
  if (!ilhte.varcomp.zeta_var) {
    throw ValidationError("prediction_interval: fit has no item slope variance");
  }
  const auto& b1 = ilhte.coef(names::kTreatment);
  return prediction_interval(b1.estimate, b1.se * b1.se, *ilhte.varcomp.zeta_var);
}

std::optional<double> rho_hat(const Fit& ilhte) {
  if (!ilhte.varcomp.zeta_var || !ilhte.varcomp.cov_b_zeta || !ilhte.varcomp.item_var) {
    return std::nullopt;
  }
  return rho_from_varcomp(*ilhte.varcomp.cov_b_zeta, *ilhte.varcomp.item_var,
                          *ilhte.varcomp.zeta_var);
}

std::vector<CurvePoint> subscale_logit_curves(const Fit& fit, double lo, double hi,
                                              int n_points) {
  if (fit.spec.kind != ModelKind::RsmSubscale) {
    throw ValidationError("subscale_logit_curves: needs a subscale model fit");
  }
  if (n_points < 2 || !(hi > lo)) throw ValidationError("subscale_logit_curves: bad grid");
  double thr_sum = 0.0;
  int thr_count = 1;  // the reference threshold
  for (const auto& c : fit.fixed) {
    if (c.name.rfind("threshold", 0) == 0) {
      thr_sum += c.estimate;
      ++thr_count;
    }
  }
  const double offset = thr_sum / thr_count;
  auto est = [&](const char* name) {
    const Coefficient* c = fit.find(name);
    return c ? c->estimate : 0.0;
  };
  const double b0 = est(names::kIntercept);
  const double b1 = est(names::kTreatment);
  const double bx = est(names::kBaseline);
  const double b3 = est(names::kTxByBaseline);
  const double g1 = est(names::kSubscale);
  const double g2 = est(names::kTxBySubscale);
  std::vector<CurvePoint> out;
  for (int s = 0; s <= 1; ++s) {
    for (int t = 0; t <= 1; ++t) {
      for (int k = 0; k < n_points; ++k) {
        const double x = lo + (hi - lo) * k / (n_points - 1);
        out.push_back({x, t, s, b0 + offset + bx * x + b1 * t + b3 * t * x + g1 * s + g2 * s * t});
      }
    }
  }
  return out;
}

}  // namespace ilhte
