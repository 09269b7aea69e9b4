#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ilhte/dgp.hpp"

using namespace ilhte;

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Fixed linear predictor eta for every response: no person or item variation.
TrueParams constant_eta(double eta, std::vector<double> thresholds, int n_items) {
  TrueParams p;
  p.beta0 = eta;
  p.beta1 = 0.0;
  p.beta_cov = 0.0;
  p.sigma_theta = 0.0;
  p.sigma_b = 0.0;
  p.thresholds = std::move(thresholds);
  draw_item_effects(p, n_items, 1);
  return p;
}

}  // namespace

TEST(ConditionGrid, MainStudy) {
  const auto g = condition_grid(Study::Main);
  ASSERT_EQ(g.size(), 81u);
  std::set<std::tuple<int, int, int, double>> cells;
  for (const auto& c : g) {
    EXPECT_EQ(c.rho, 0.0);
    EXPECT_EQ(c.n_reps, 200);
    cells.insert({c.k, c.n_persons, c.n_items, c.sigma_zeta});
  }
  EXPECT_EQ(cells.size(), 81u);
}

TEST(ConditionGrid, RhoStudy) {
  const auto g = condition_grid(Study::Rho);
  ASSERT_EQ(g.size(), 81u);
  std::set<double> rhos;
  for (const auto& c : g) {
    EXPECT_EQ(c.k, 3);
    EXPECT_EQ(c.sigma_zeta, 0.4);
    EXPECT_EQ(c.n_reps, 200);
    rhos.insert(c.rho);
  }
  EXPECT_EQ(rhos, (std::set<double>{-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1}));
}

TEST(ConditionGrid, DeskSubset) {
  EXPECT_EQ(desk_grid(Study::Main).size(), 12u);  // 3 sigma x 2 n x 2 items
  EXPECT_EQ(desk_grid(Study::Rho).size(), 20u);   // 5 rho x 2 n x 2 items
  for (const auto& c : desk_grid(Study::Rho)) EXPECT_EQ(c.k, 3);
}

TEST(Thresholds, EquallySpacedAndSymmetric) {
  EXPECT_EQ(default_thresholds(3), (std::vector<double>{-0.5, 0.5}));
  const auto t5 = default_thresholds(5);
  ASSERT_EQ(t5.size(), 4u);
  EXPECT_NEAR(t5[1], -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(t5[3], 1.0, 1e-15);
  const auto t7 = default_thresholds(7);
  ASSERT_EQ(t7.size(), 6u);
  EXPECT_EQ(t7.front(), -1.0);
  EXPECT_NEAR(t7.back(), 1.0, 1e-15);
  for (std::size_t h = 1; h < t7.size(); ++h) EXPECT_NEAR(t7[h] - t7[h - 1], 0.4, 1e-15);
}

TEST(DrawTrueParams, FixedDesignValues) {
  Condition c;
  c.k = 5;
  c.sigma_zeta = 0.2;
  const auto p = draw_true_params(c, 3);
  EXPECT_EQ(p.beta0, 0.0);
  EXPECT_EQ(p.beta1, 0.20);
  EXPECT_EQ(p.beta_cov, 1.0);
  EXPECT_EQ(p.beta_interact, 0.0);
  EXPECT_EQ(p.sigma_b, 1.0);
  EXPECT_EQ(p.sigma_theta, 0.5);
  EXPECT_EQ(p.thresholds.size(), 4u);
  EXPECT_EQ(p.item_b.size(), 20u);
}

TEST(DrawTrueParams, ZeroSlopeVarianceGivesZeroEffects) {
  Condition c;
  c.sigma_zeta = 0.0;
  c.rho = 0.5;
  const auto p = draw_true_params(c, 11);
  for (double z : p.item_zeta) EXPECT_EQ(z, 0.0);
}

TEST(DrawTrueParams, PerfectCorrelation) {
  TrueParams p;
  p.thresholds = {-0.5, 0.5};
  p.sigma_zeta = 0.4;
  p.rho = 1.0;
  draw_item_effects(p, 100000, 7);
  EXPECT_NEAR(correlation(p.item_b, p.item_zeta), 1.0, 1e-12);
}

TEST(DrawTrueParams, BivariateSamplerCorrelation) {
  TrueParams p;
  p.thresholds = {-0.5, 0.5};
  p.sigma_zeta = 0.4;
  p.rho = -0.5;
  draw_item_effects(p, 100000, 8);
  EXPECT_NEAR(correlation(p.item_b, p.item_zeta), -0.5, 0.01);
}

TEST(RsmPmf, SymmetricCaseIsUniform) {
  const auto pmf = rsm_pmf(0.0, {0.0, 0.0});
  ASSERT_EQ(pmf.size(), 3u);
  for (double v : pmf) EXPECT_EQ(v, 1.0 / 3.0);
}

TEST(RsmPmf, NormalizationAndLogOddsIdentity) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> eta_dist(-8.0, 8.0), tau_dist(-3.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + trial % 6;
    std::vector<double> tau(static_cast<std::size_t>(k - 1));
    for (double& t : tau) t = tau_dist(rng);
    std::sort(tau.begin(), tau.end());
    const double eta = eta_dist(rng);
    const auto pmf = rsm_pmf(eta, tau);
    double total = 0.0;
    for (double v : pmf) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (int c = 1; c < k; ++c) {
      const double lo = std::log(pmf[static_cast<std::size_t>(c)] / pmf[static_cast<std::size_t>(c - 1)]);
      EXPECT_NEAR(lo, eta - tau[static_cast<std::size_t>(c - 1)], 1e-12);
    }
  }
}

TEST(RsmPmf, ThreeCategoryEnumeration) {
  // P(c) = exp(sum_{h<=c}(eta - tau_h)) / normalizer, written out by hand.
  const double eta = 0.5;
  const double w0 = 1.0, w1 = std::exp(eta + 0.5), w2 = std::exp(eta + 0.5 + eta - 0.5);
  const double z = w0 + w1 + w2;
  const auto pmf = rsm_pmf(eta, {-0.5, 0.5});
  EXPECT_NEAR(pmf[0], w0 / z, 1e-15);
  EXPECT_NEAR(pmf[1], w1 / z, 1e-15);
  EXPECT_NEAR(pmf[2], w2 / z, 1e-15);
}

TEST(SimulateDataset, EmpiricalFrequenciesMatchPmf) {
  const auto p = constant_eta(0.5, {-0.5, 0.5}, 5);
  const LongTable t = simulate_dataset(p, 200000, 5, 3, 2024);
  std::array<double, 3> counts{};
  for (const auto& r : t.rows()) counts[static_cast<std::size_t>(*r.response)] += 1.0;
  const auto pmf = rsm_pmf(0.5, {-0.5, 0.5});
  for (int c = 0; c < 3; ++c) {
    EXPECT_LT(std::abs(counts[static_cast<std::size_t>(c)] / 1e6 - pmf[static_cast<std::size_t>(c)]), 0.002);
  }
}

TEST(SimulateDataset, TreatmentShiftsTheLatentScaleByBeta1) {
  // Binary items with zero threshold and no other variation: the arm
  // difference in log-odds of endorsement recovers beta1.
  auto p = constant_eta(0.0, {0.0}, 10);
  p.beta1 = 0.20;
  const LongTable t = simulate_dataset(p, 100000, 10, 2, 77);
  double n[2] = {0, 0}, yes[2] = {0, 0};
  for (const auto& r : t.rows()) {
    n[r.treatment] += 1;
    yes[r.treatment] += *r.response;
  }
  auto logit = [](double q) { return std::log(q / (1 - q)); };
  EXPECT_NEAR(logit(yes[1] / n[1]) - logit(yes[0] / n[0]), 0.20, 0.01);
  // Balanced assignment.
  EXPECT_NEAR(n[1] / (n[0] + n[1]), 0.5, 0.01);
}

TEST(SimulateDataset, SeedDeterminism) {
  Condition c;
  c.n_persons = 50;
  c.n_items = 8;
  c.k = 5;
  c.sigma_zeta = 0.4;
  const auto p1 = draw_true_params(c, 9);
  const auto p2 = draw_true_params(c, 9);
  EXPECT_EQ(p1.item_b, p2.item_b);
  EXPECT_EQ(p1.item_zeta, p2.item_zeta);
  const auto a = simulate_dataset(p1, 50, 8, 5, 123);
  const auto b = simulate_dataset(p2, 50, 8, 5, 123);
  ASSERT_EQ(a.n_rows(), b.n_rows());
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    EXPECT_EQ(a.rows()[r].person_id, b.rows()[r].person_id);
    EXPECT_EQ(a.rows()[r].response, b.rows()[r].response);
    EXPECT_EQ(a.rows()[r].treatment, b.rows()[r].treatment);
    EXPECT_EQ(std::memcmp(&a.rows()[r].baseline, &b.rows()[r].baseline, sizeof(double)), 0);
  }
  const auto other = simulate_dataset(p1, 50, 8, 5, 124);
  bool differs = false;
  for (std::size_t r = 0; r < a.n_rows(); ++r) differs |= a.rows()[r].response != other.rows()[r].response;
  EXPECT_TRUE(differs);
}

TEST(SimulateDataset, ProducesValidTable) {
  const LongTable t = fixtures::simulated(40, 12, 7, 0.4, -0.5, 5);
  EXPECT_TRUE(validate(t).empty());
  EXPECT_EQ(t.n_rows(), 40u * 12u);
}

TEST(SimulateDataset, CollapsedEndorsementIsMonotoneInEta) {
  // Analytic: P(Y >= 1) for k = 3 increases with eta.
  double prev = -1.0;
  for (double eta = -6.0; eta <= 6.0; eta += 0.05) {
    const auto pmf = rsm_pmf(eta, {-0.5, 0.5});
    const double endorse = 1.0 - pmf[0];
    EXPECT_GT(endorse, prev);
    prev = endorse;
  }
  // Simulated: endorsement rate rises across baseline quintiles, since
  // baseline enters eta with a positive coefficient.
  const LongTable t = fixtures::simulated(20000, 3, 3, 0.0, 0.0, 31);
  std::vector<double> xs;
  for (const auto& r : t.rows()) xs.push_back(r.baseline);
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  double n[5] = {}, yes[5] = {};
  for (const auto& r : t.rows()) {
    const auto pos = std::lower_bound(sorted.begin(), sorted.end(), r.baseline) - sorted.begin();
    const int bin = std::min(4, static_cast<int>(5 * pos / static_cast<long>(sorted.size())));
    n[bin] += 1;
    yes[bin] += *r.response >= 1 ? 1 : 0;
  }
  for (int b = 1; b < 5; ++b) EXPECT_GT(yes[b] / n[b], yes[b - 1] / n[b - 1]);
}

TEST(Hdrs, ItemLayout) {
  const auto items = hdrs17_items();
  ASSERT_EQ(items.size(), 17u);
  int five = 0, three = 0;
  std::vector<int> sub;
  for (std::size_t i = 0; i < items.size(); ++i) {
    five += items[i].n_categories == 5;
    three += items[i].n_categories == 3;
    if (items[i].subscale_flag) sub.push_back(static_cast<int>(i) + 1);
  }
  EXPECT_EQ(five, 9);
  EXPECT_EQ(three, 8);
  EXPECT_EQ(sub, (std::vector<int>{1, 2, 7, 8, 10, 13}));
}

TEST(Hdrs, DefaultsMatchTheEmpiricalFit) {
  const auto p = hdrs_params_ilhte();
  EXPECT_EQ(p.beta1, -0.204);
  EXPECT_NEAR(p.sigma_theta * p.sigma_theta, 0.571, 1e-12);
  EXPECT_NEAR(p.sigma_b * p.sigma_b, 0.985, 1e-12);
  EXPECT_NEAR(p.sigma_zeta * p.sigma_zeta, 0.034, 1e-12);
  EXPECT_NEAR(p.cov_b_zeta(), -0.090, 1e-12);
  EXPECT_EQ(hdrs_params_subscale().gamma2, -0.265);
}

TEST(Hdrs, SimulatedDataRespectsCategoryRanges) {
  TrueParams realized;
  const LongTable t = simulate_hdrs_like(400, hdrs_params_ilhte(), 5, &realized);
  EXPECT_TRUE(validate(t).empty());
  EXPECT_EQ(realized.item_b.size(), 17u);
  int max_three = 0, max_five = 0;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const auto& info = t.items()[t.row_item_index()[r]];
    const int y = *t.rows()[r].response;
    if (info.n_categories == 3) max_three = std::max(max_three, y);
    else max_five = std::max(max_five, y);
  }
  EXPECT_EQ(max_three, 2);
  EXPECT_EQ(max_five, 4);
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t c = 0; c < 50; ++c) {
    for (std::uint64_t r = 0; r < 50; ++r) seen.insert(derive_seed(1, c, r));
  }
  EXPECT_EQ(seen.size(), 2500u);
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
}
