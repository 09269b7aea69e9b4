#pragma once

#include <string>
#include <vector>

#include "ilhte/core.hpp"
#include "ilhte/dgp.hpp"

namespace fixtures {

inline std::vector<ilhte::ItemInfo> items(int n, int k, int n_subscale = 0) {
  std::vector<ilhte::ItemInfo> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({"i" + std::to_string(i + 1), k, i < n_subscale ? 1 : 0});
  }
  return out;
}

inline ilhte::ResponseRow row(const std::string& person, const std::string& item,
                              std::optional<int> y, int treatment, double baseline,
                              int subscale = 0) {
  ilhte::ResponseRow r;
  r.person_id = person;
  r.item_id = item;
  r.response = y;
  r.treatment = treatment;
  r.baseline = baseline;
  r.subscale_flag = subscale;
  return r;
}

// A simulated table from fixed generating values, independent of the grid.
inline ilhte::LongTable simulated(int n_persons, int n_items, int k, double sigma_zeta,
                                  double rho, std::uint64_t seed, ilhte::TrueParams* out = nullptr) {
  ilhte::TrueParams p;
  p.thresholds = ilhte::default_thresholds(k);
  p.sigma_zeta = sigma_zeta;
  p.rho = rho;
  ilhte::draw_item_effects(p, n_items, seed ^ 0x1234);
  if (out != nullptr) *out = p;
  return ilhte::simulate_dataset(p, n_persons, n_items, k, seed);
}

}  // namespace fixtures
