#pragma once

// One-call model fitting from a long-format table, for every model kind.

#include "ilhte/core.hpp"
#include "ilhte/glmm.hpp"

namespace ilhte {

/// Validates, then either runs the sum-score OLS (1A/1B) or expands and fits
/// the mixed model (2A/2B/2C).
Fit fit_model(const LongTable& table, const ModelSpec& spec, const FitOptions& options = {});

}  // namespace ilhte
