#pragma once

// Synthetic data from the adjacent-category rating scale model with random
// item locations and item-specific treatment effects.

#include <cstdint>
#include <string>
#include <vector>

#include "ilhte/core.hpp"

namespace ilhte {

enum class Study { Main, Rho };

const char* study_label(Study study);  // "main" / "rho"
Study parse_study(const std::string& label);

struct Condition {
  Study study = Study::Main;
  int n_persons = 500;
  int n_items = 20;
  int k = 3;
  double sigma_zeta = 0.0;
  double rho = 0.0;
  int n_reps = 200;
  std::uint64_t base_seed = 0;
};

/// Fully crossed grid for one study. MAIN crosses k x sigma_zeta x n_persons x
/// n_items at rho = 0; RHO fixes k = 3, sigma_zeta = .4 and crosses
/// rho x n_persons x n_items. Every condition carries 200 replications.
std::vector<Condition> condition_grid(Study study);

/// Reduced grid for routine runs: k = 3, n in {300, 1000}, items in {8, 20};
/// MAIN keeps every sigma_zeta, RHO keeps rho in {-1, -.5, 0, .5, 1}.
std::vector<Condition> desk_grid(Study study);

/// Equally spaced thresholds spanning [-1, 1] for k categories.
std::vector<double> default_thresholds(int k);

/// Fixed design values plus a bivariate normal draw of (b_i, zeta_i) for each
/// of condition.n_items items. Deterministic in `seed`.
TrueParams draw_true_params(const Condition& condition, std::uint64_t seed);

/// Draws n_items (b, zeta) pairs with SDs (sigma_b, sigma_zeta) and
/// correlation rho, writing them into params.item_b / params.item_zeta.
void draw_item_effects(TrueParams& params, int n_items, std::uint64_t seed);

/// Category probabilities P(Y = c), c = 0..thresholds.size(), with
/// P(Y = c) proportional to exp(sum_{h <= c} (eta - tau_h)).
std::vector<double> rsm_pmf(double eta, const std::vector<double>& thresholds);

/// Simulates a person x item table. Person j gets T ~ Bernoulli(.5),
/// X ~ N(0, 1) and latent theta_j = beta0 + beta1 T + beta_cov X +
/// beta_interact T X + e_j; item i adds b_i + zeta_i T (+ gamma terms when the
/// item carries a subscale flag). Requires params.item_b.size() >= n_items.
LongTable simulate_dataset(const TrueParams& params, int n_persons, int n_items, int k,
                           std::uint64_t seed);

/// Simulation over an arbitrary item layout: items[i].n_categories sets the
/// range of item i and the leading thresholds are used.
LongTable simulate_items(const TrueParams& params, const std::vector<ItemInfo>& items,
                         int n_persons, std::uint64_t seed);

/// Seventeen items mirroring the HDRS-17 layout: nine 0-4 items, eight 0-2
/// items, six subscale items (1, 2, 7, 8, 10, 13).
std::vector<ItemInfo> hdrs17_items();

/// Generating values calibrated to the random-slope rating scale fit of the
/// empirical data (no subscale terms).
TrueParams hdrs_params_ilhte();

/// Generating values calibrated to the subscale-interaction fit.
TrueParams hdrs_params_subscale();

/// HDRS-like data set. Item draws in `params` are replaced by fresh draws of
/// 17 items unless params already carries exactly 17.
LongTable simulate_hdrs_like(int n_persons, const TrueParams& params, std::uint64_t seed,
                             TrueParams* realized = nullptr);

/// splitmix64-based combination used for per-replication seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace ilhte
