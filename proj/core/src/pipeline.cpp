#include "ilhte/pipeline.hpp"

#include "ilhte/expand.hpp"
#include "ilhte/sumscore.hpp"

namespace ilhte {

Fit fit_model(const LongTable& table, const ModelSpec& spec, const FitOptions& options) {
  require_valid(table);
  if (spec.is_sum_score()) return fit_sum_score(table, spec);
  const BinaryTable bt = expand_adjacent(table, spec.expansion);
  return fit_glmm(bt, spec, options);
}

}  // namespace ilhte
