#pragma once

// Post-fit arithmetic: prediction intervals for out-of-sample item effects,
// pseudo-R^2 for explained item-level heterogeneity, location/effect
// correlation and standard-error inflation.

#include <optional>
#include <vector>

#include "ilhte/core.hpp"

namespace ilhte {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// beta1 +/- 1.96 sqrt(sigma_zeta^2 + Var(beta1)).
Interval prediction_interval(double beta1, double var_beta1, double sigma_zeta_sq);

struct PseudoR2 {
  double value = 0.0;
  bool negative = false;  // the conditional model has more slope variance
};

/// (sigma0^2 - sigma1^2) / sigma0^2. Throws on a zero denominator.
PseudoR2 pseudo_r2(double sigma_zeta_sq_0, double sigma_zeta_sq_1);

/// cov / sqrt(var_b var_zeta), or nullopt when either variance is zero.
std::optional<double> rho_from_varcomp(double cov, double var_b, double var_zeta);

struct SeInflation {
  double ratio = 1.0;               // SE_ilhte / SE_constant
  double effective_n_factor = 1.0;  // ratio^2
};

SeInflation se_inflation(double se_constant, double se_ilhte);
/// Uses the treatment coefficient of each fit.
SeInflation se_inflation(const Fit& constant, const Fit& ilhte);

/// Prediction interval from an item-slope fit.
Interval prediction_interval(const Fit& ilhte);

/// Location/effect correlation of an item-slope fit.
std::optional<double> rho_hat(const Fit& ilhte);

struct CurvePoint {
  double baseline = 0.0;
  int treatment = 0;
  int subscale = 0;
  double log_odds = 0.0;
};

/// Fitted log-odds of endorsing the average category or higher on an average
/// item, by baseline, treatment arm and subscale membership, from a subscale
/// model (2C). The average category offset is the mean of the threshold
/// coefficients with the reference threshold counted as 0.
std::vector<CurvePoint> subscale_logit_curves(const Fit& fit, double lo = -2.5, double hi = 2.5,
                                              int n_points = 51);

}  // namespace ilhte
