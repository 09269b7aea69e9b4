#include "ilhte/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ilhte {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string padded_id(const char* prefix, int index, int total) {
  std::string digits = std::to_string(index);
  const std::size_t width = std::to_string(total).size();
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

int draw_category(const std::vector<double>& pmf, double u) {
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < pmf.size(); ++c) {
    acc += pmf[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(pmf.size()) - 1;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0xd1342543de82ef95ULL));
}

const char* study_label(Study study) { return study == Study::Main ? "main" : "rho"; }

Study parse_study(const std::string& label) {
  if (label == "main") return Study::Main;
  if (label == "rho") return Study::Rho;
  throw ValidationError("unknown study '" + label + "' (expected main or rho)");
}

std::vector<Condition> condition_grid(Study study) {
  std::vector<Condition> grid;
  const int persons[] = {300, 500, 1000};
  const int items[] = {8, 12, 20};
  if (study == Study::Main) {
    for (int k : {3, 5, 7}) {
      for (double sz : {0.0, 0.2, 0.4}) {
        for (int n : persons) {
          for (int m : items) {
            grid.push_back({Study::Main, n, m, k, sz, 0.0, 200, 0});
          }
        }
      }
    }
  } else {
    for (int step = -4; step <= 4; ++step) {
      const double rho = 0.25 * step;
      for (int n : persons) {
        for (int m : items) {
          grid.push_back({Study::Rho, n, m, 3, 0.4, rho, 200, 0});
        }
      }
    }
  }
  return grid;
}

std::vector<Condition> desk_grid(Study study) {
  std::vector<Condition> out;
  for (const auto& c : condition_grid(study)) {
    if (c.k != 3) continue;
    if (c.n_persons != 300 && c.n_persons != 1000) continue;
    if (c.n_items != 8 && c.n_items != 20) continue;
    if (study == Study::Rho) {
      const double r = c.rho;
      if (r != -1.0 && r != -0.5 && r != 0.0 && r != 0.5 && r != 1.0) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<double> default_thresholds(int k) {
  if (k < 2) throw ValidationError("need at least 2 categories");
  std::vector<double> tau(static_cast<std::size_t>(k - 1));
  if (k == 2) {
    tau[0] = 0.0;
    return tau;
  }
  if (k == 3) {
    tau = {-0.5, 0.5};
    return tau;
  }
  const double step = 2.0 / static_cast<double>(k - 2);
  for (int h = 0; h < k - 1; ++h) tau[static_cast<std::size_t>(h)] = -1.0 + step * h;
  return tau;
}

void draw_item_effects(TrueParams& params, int n_items, std::uint64_t seed) {
  check_params(params);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double tail = std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));
  params.item_b.assign(static_cast<std::size_t>(n_items), 0.0);
  params.item_zeta.assign(static_cast<std::size_t>(n_items), 0.0);
  for (int i = 0; i < n_items; ++i) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    params.item_b[static_cast<std::size_t>(i)] = params.sigma_b * z1;
    params.item_zeta[static_cast<std::size_t>(i)] =
        params.sigma_zeta == 0.0 ? 0.0 : params.sigma_zeta * (params.rho * z1 + tail * z2);
  }
}

TrueParams draw_true_params(const Condition& condition, std::uint64_t seed) {
  TrueParams p;
  p.beta0 = 0.0;
  p.beta1 = 0.20;
  p.beta_cov = 1.0;
  p.beta_interact = 0.0;
  p.sigma_theta = 0.5;
  p.sigma_b = 1.0;
  p.sigma_zeta = condition.sigma_zeta;
  p.rho = condition.rho;
  p.thresholds = default_thresholds(condition.k);
  draw_item_effects(p, condition.n_items, seed);
  return p;
}

std::vector<double> rsm_pmf(double eta, const std::vector<double>& thresholds) {
  const std::size_t k = thresholds.size() + 1;
  std::vector<double> logw(k, 0.0);
  for (std::size_t c = 1; c < k; ++c) logw[c] = logw[c - 1] + (eta - thresholds[c - 1]);
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - top);
    total += w;
  }
  for (double& w : logw) w /= total;
  return logw;
}

LongTable simulate_items(const TrueParams& params, const std::vector<ItemInfo>& items,
                         int n_persons, std::uint64_t seed) {
  check_params(params);
  const std::size_t n_items = items.size();
  if (params.item_b.size() < n_items) {
    throw ValidationError("simulate: params carry fewer item draws than items");
  }
  for (const auto& it : items) {
    if (it.n_categories < 2) throw ValidationError("simulate: k must be >= 2");
    if (static_cast<std::size_t>(it.n_categories - 1) > params.thresholds.size()) {
      throw ValidationError("simulate: item '" + it.item_id +
                            "' needs more thresholds than params provide");
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<ResponseRow> rows;
  rows.reserve(static_cast<std::size_t>(n_persons) * n_items);
  std::vector<std::vector<double>> item_tau(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    item_tau[i].assign(params.thresholds.begin(),
                       params.thresholds.begin() + (items[i].n_categories - 1));
  }

  for (int j = 0; j < n_persons; ++j) {
    const int t = unif(rng) < 0.5 ? 1 : 0;
    const double x = normal(rng);
    const double e = params.sigma_theta * normal(rng);
    const double theta = params.beta0 + params.beta1 * t + params.beta_cov * x +
                         params.beta_interact * t * x + e;
    const std::string pid = padded_id("p", j + 1, n_persons);
    for (std::size_t i = 0; i < n_items; ++i) {
      const double s = items[i].subscale_flag;
      const double eta = theta + params.item_b[i] + params.gamma1 * s +
                         (params.item_zeta[i] + params.gamma2 * s) * t;
      const int y = draw_category(rsm_pmf(eta, item_tau[i]), unif(rng));
      ResponseRow row;
      row.person_id = pid;
      row.item_id = items[i].item_id;
      row.response = y;
      row.treatment = t;
      row.baseline = x;
      row.subscale_flag = items[i].subscale_flag;
      rows.push_back(std::move(row));
    }
  }
  return LongTable(items, std::move(rows));
}

LongTable simulate_dataset(const TrueParams& params, int n_persons, int n_items, int k,
                           std::uint64_t seed) {
  if (k < 2) throw ValidationError("simulate: k must be >= 2");
  std::vector<ItemInfo> items;
  items.reserve(static_cast<std::size_t>(n_items));
  for (int i = 0; i < n_items; ++i) {
    items.push_back({padded_id("item", i + 1, std::max(n_items, 10)), k, 0});
  }
  return simulate_items(params, items, n_persons, seed);
}

std::vector<ItemInfo> hdrs17_items() {
  // Range 0-4 items: 1, 2, 3, 7, 8, 9, 10, 11, 15. Subscale: 1, 2, 7, 8, 10, 13.
  const int five[] = {1, 2, 3, 7, 8, 9, 10, 11, 15};
  const int sub[] = {1, 2, 7, 8, 10, 13};
  std::vector<ItemInfo> items;
  for (int i = 1; i <= 17; ++i) {
    const bool is_five = std::find(std::begin(five), std::end(five), i) != std::end(five);
    const bool is_sub = std::find(std::begin(sub), std::end(sub), i) != std::end(sub);
    items.push_back({padded_id("hdrs", i, 10), is_five ? 5 : 3, is_sub ? 1 : 0});
  }
  return items;
}

TrueParams hdrs_params_ilhte() {
  TrueParams p;
  p.beta0 = 0.0;
  p.beta1 = -0.204;
  p.beta_cov = 0.201;
  p.sigma_theta = std::sqrt(0.571);
  p.sigma_b = std::sqrt(0.985);
  p.sigma_zeta = std::sqrt(0.034);
  p.rho = -0.090 / (p.sigma_b * p.sigma_zeta);
  // Intercept -.417 and threshold contrasts -.772, -2.642, -3.870 with beta0 = 0.
  p.thresholds = {0.417, 0.417 + 0.772, 0.417 + 2.642, 0.417 + 3.870};
  return p;
}

TrueParams hdrs_params_subscale() {
  TrueParams p;
  p.beta0 = 0.0;
  p.beta1 = -0.111;
  p.beta_cov = 0.201;
  p.sigma_theta = std::sqrt(0.570);
  p.sigma_b = std::sqrt(0.549);
  p.sigma_zeta = std::sqrt(0.017);
  p.rho = -0.004 / (p.sigma_b * p.sigma_zeta);
  p.thresholds = {0.881, 0.881 + 0.772, 0.881 + 2.642, 0.881 + 3.872};
  p.gamma1 = 1.328;
  p.gamma2 = -0.265;
  return p;
}

LongTable simulate_hdrs_like(int n_persons, const TrueParams& params, std::uint64_t seed,
                             TrueParams* realized) {
  TrueParams p = params;
  const auto items = hdrs17_items();
  if (p.item_b.size() != items.size()) {
    draw_item_effects(p, static_cast<int>(items.size()), derive_seed(seed, 0x17));
  }
  auto table = simulate_items(p, items, n_persons, derive_seed(seed, 0x18));
  if (realized != nullptr) *realized = std::move(p);
  return table;
}

}  // namespace ilhte
