#pragma once

#include <functional>
#include <vector>

namespace ilhte {

struct NelderMeadOptions {
  double f_tolerance = 1e-6;   // relative spread of simplex values
  double x_tolerance = 1e-4;   // max coordinate distance from the best vertex
  int max_evaluations = 500;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> best_trace;  // best value after every iteration
};

/// Minimizes f from an axis-aligned simplex with the given per-coordinate
/// steps. Box constraints are imposed by the caller through f.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const std::vector<double>& steps,
                             const NelderMeadOptions& options = {});

}  // namespace ilhte
