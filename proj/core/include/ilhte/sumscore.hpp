#pragma once

// OLS baselines on standardized sum scores (models 1A and 1B).

#include <vector>

#include "ilhte/core.hpp"

namespace ilhte {

/// Regresses y on (1, T, X[, T*X]) with classical homoskedastic SEs.
/// Coefficient names follow the shared names:: constants.
Fit ols_fit(const std::vector<double>& y, const std::vector<int>& treatment,
            const std::vector<double>& baseline, bool interact);

/// Sum scores of a table followed by ols_fit; persons with missing items are
/// excluded and counted in Fit::n_excluded.
Fit fit_sum_score(const LongTable& table, const ModelSpec& spec);

}  // namespace ilhte
