#include "ilhte/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ilhte {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> start, const std::vector<double>& steps,
                             const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  if (steps.size() != n || n == 0) throw std::invalid_argument("nelder_mead: bad dimensions");

  NelderMeadResult out;
  auto eval = [&](const std::vector<double>& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  vals[0] = eval(start);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i + 1][i] += steps[i];
    vals[i + 1] = eval(pts[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto combine = [&](std::vector<double>& dst, const std::vector<double>& worst, double coef) {
    for (std::size_t k = 0; k < n; ++k) dst[k] = centroid[k] + coef * (worst[k] - centroid[k]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];
    out.best_trace.push_back(vals[best]);

    double spread_x = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        spread_x = std::max(spread_x, std::abs(pts[i][k] - pts[best][k]));
      }
    }
    const double spread_f = vals[worst] - vals[best];
    if (spread_f <= options.f_tolerance * (std::abs(vals[best]) + 1e-10) &&
        spread_x <= options.x_tolerance) {
      out.converged = true;
      break;
    }
    if (out.evaluations >= options.max_evaluations) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);
    }

    combine(xr, pts[worst], -1.0);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      combine(xe, pts[worst], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    // Contraction, outside if the reflection beat the worst point.
    const bool outside = fr < vals[worst];
    combine(xc, outside ? xr : pts[worst], 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }

  const auto best_it = std::min_element(vals.begin(), vals.end());
  out.x = pts[static_cast<std::size_t>(best_it - vals.begin())];
  out.value = *best_it;
  return out;
}

}  // namespace ilhte
