#include "ilhte/sumscore.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace ilhte {

Fit ols_fit(const std::vector<double>& y, const std::vector<int>& treatment,
            const std::vector<double>& baseline, bool interact) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (treatment.size() != y.size() || baseline.size() != y.size()) {
    throw ValidationError("ols_fit: input lengths differ");
  }
  const Eigen::Index p = interact ? 4 : 3;
  if (n <= p) throw ValidationError("ols_fit: not enough observations");

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd Y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    X(r, 0) = 1.0;
    X(r, 1) = treatment[ru];
    X(r, 2) = baseline[ru];
    if (interact) X(r, 3) = treatment[ru] * baseline[ru];
    Y(r) = y[ru];
  }
  std::vector<std::string> names = {names::kIntercept, names::kTreatment, names::kBaseline};
  if (interact) names.emplace_back(names::kTxByBaseline);
  for (Eigen::Index c = 1; c < p; ++c) {
    const double mean = X.col(c).mean();
    if ((X.col(c).array() - mean).square().sum() == 0.0) {
      throw ValidationError("ols_fit: regressor '" + names[static_cast<std::size_t>(c)] +
                            "' has zero variance");
    }
  }

  const Eigen::MatrixXd xtx = X.transpose() * X;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) {
    throw ValidationError("ols_fit: regressors are collinear");
  }
  const Eigen::VectorXd beta = ldlt.solve(X.transpose() * Y);
  const Eigen::VectorXd resid = Y - X * beta;
  const double rss = resid.squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - p);
  const Eigen::MatrixXd cov = sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  Fit fit;
  fit.spec.kind = interact ? ModelKind::SumOlsInteract : ModelKind::SumOlsConstant;
  fit.fixed_cov = cov;
  for (Eigen::Index c = 0; c < p; ++c) {
    fit.fixed.push_back({names[static_cast<std::size_t>(c)], beta(c), std::sqrt(cov(c, c))});
  }
  const double tss = (Y.array() - Y.mean()).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  fit.n_obs = static_cast<std::size_t>(n);
  // Gaussian log-likelihood at the ML variance, for reference only.
  const double s2ml = rss / static_cast<double>(n);
  fit.loglik = -0.5 * static_cast<double>(n) * (std::log(2.0 * M_PI * s2ml) + 1.0);
  fit.n_variance_params = 1;
  const double k = static_cast<double>(p + 1);
  fit.aic = -2.0 * fit.loglik + 2.0 * k;
  fit.bic = -2.0 * fit.loglik + std::log(static_cast<double>(n)) * k;
  fit.converged = true;
  fit.message = "ols";
  return fit;
}

Fit fit_sum_score(const LongTable& table, const ModelSpec& spec) {
  if (!spec.is_sum_score()) throw ValidationError("fit_sum_score: not a sum-score model");
  require_valid(table);
  const SumScores ss = sum_scores(table);
  Fit fit = ols_fit(ss.standardized, ss.treatment, ss.baseline,
                    spec.kind == ModelKind::SumOlsInteract);
  fit.spec = spec;
  fit.person_ids = ss.person_ids;
  for (const auto& it : table.items()) fit.item_ids.push_back(it.item_id);
  fit.n_excluded = ss.incomplete_persons.size();
  return fit;
}

}  // namespace ilhte
