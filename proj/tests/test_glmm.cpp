#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ilhte/expand.hpp"
#include "ilhte/glmm.hpp"
#include "ilhte/montecarlo.hpp"
#include "ilhte/pipeline.hpp"
#include "oracles.hpp"

using namespace ilhte;

namespace {

// Two persons by two items with `per_cell` rows per person-item pair. Person 1
// is treated, which is the slope covariate for item_dim 2.
DesignMatrices tiny_design(int item_dim, int per_cell, std::uint64_t seed, int n_persons = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.5);
  const int n = n_persons * 2 * per_cell;
  DesignMatrices::RowMatrix X(n, 2);
  Eigen::VectorXd y(n), slope(n);
  std::vector<int> person, item;
  int r = 0;
  for (int j = 0; j < n_persons; ++j) {
    for (int i = 0; i < 2; ++i) {
      for (int c = 0; c < per_cell; ++c, ++r) {
        X(r, 0) = 1.0;
        X(r, 1) = z(rng);
        y(r) = coin(rng) ? 1.0 : 0.0;
        slope(r) = j == 1 ? 1.0 : 0.0;
        person.push_back(j);
        item.push_back(i);
      }
    }
  }
  return make_design(X, {"(Intercept)", "x"}, y, person, item, slope, item_dim, n_persons, 2);
}

VarianceStructure vs_2a(double s, double l11) { return VarianceStructure::from_theta({s, l11}, 1); }
VarianceStructure vs_2b(double s, double l11, double l21, double l22) {
  return VarianceStructure::from_theta({s, l11, l21, l22}, 2);
}

std::vector<VarianceStructure> structures() {
  return {vs_2a(0.8, 1.2), vs_2a(0.3, 0.5), vs_2a(1.5, 0.1), vs_2b(0.7, 1.1, -0.3, 0.6),
          vs_2b(1.0, 0.4, 0.5, 0.2)};
}

DesignMatrices design_for(const VarianceStructure& vs, std::uint64_t seed) {
  return tiny_design(vs.item_dim, 5, seed);
}

}  // namespace

TEST(Variance, ThetaVarcompRoundTrip) {
  const auto vs = vs_2b(0.7, 1.1, -0.3, 0.6);
  const VarComp vc = vs.to_varcomp();
  EXPECT_NEAR(*vc.person_var, 0.49, 1e-15);
  EXPECT_NEAR(*vc.item_var, 1.21, 1e-15);
  EXPECT_NEAR(*vc.zeta_var, 0.09 + 0.36, 1e-15);
  EXPECT_NEAR(*vc.cov_b_zeta, 1.1 * -0.3, 1e-15);
  const auto back = VarianceStructure::from_varcomp(vc);
  const auto t = back.theta();
  const std::vector<double> expected{0.7, 1.1, -0.3, 0.6};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(t[k], expected[k], 1e-14);
  EXPECT_EQ(VarianceStructure::lower_bounds(2)[1], 0.0);
}

TEST(Pirls, ModesMatchDenseNewtonAtFixedBeta) {
  int seed = 1;
  for (const auto& vs : structures()) {
    const auto dm = design_for(vs, static_cast<std::uint64_t>(seed++));
    const auto m = oracle::dense_model(dm, vs);
    const Eigen::Vector2d beta(0.3, -0.4);
    const auto lib = pirls_modes(dm, vs, beta);
    const auto ref = oracle::dense_modes(m, beta, false);
    ASSERT_TRUE(lib.converged);
    EXPECT_LT((lib.u - ref.u).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_NEAR(lib.penalized_deviance(), oracle::penalized_deviance(m, beta, ref.u), 1e-6);
  }
}

TEST(Pirls, JointModesMatchDenseNewton) {
  int seed = 10;
  for (const auto& vs : structures()) {
    const auto dm = design_for(vs, static_cast<std::uint64_t>(seed++));
    const auto m = oracle::dense_model(dm, vs);
    LaplaceEngine engine(dm);
    const auto lib = engine.solve(vs);
    const auto ref = oracle::dense_modes(m, Eigen::Vector2d::Zero(), true);
    EXPECT_LT((lib.beta - ref.beta).lpNorm<Eigen::Infinity>(), 1e-6);
    EXPECT_LT((lib.u - ref.u).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(Laplace, MatchesIndependentImplementation) {
  int seed = 20;
  for (const auto& vs : structures()) {
    const auto dm = design_for(vs, static_cast<std::uint64_t>(seed++));
    const auto m = oracle::dense_model(dm, vs);
    // Fixed beta.
    const Eigen::Vector2d beta(-0.2, 0.5);
    const auto ref_u = oracle::dense_modes(m, beta, false).u;
    EXPECT_NEAR(pirls_modes(dm, vs, beta).laplace_deviance(),
                oracle::dense_laplace_deviance(m, beta, ref_u), 1e-6);
    // Beta at the joint mode.
    const auto joint = oracle::dense_modes(m, Eigen::Vector2d::Zero(), true);
    EXPECT_NEAR(laplace_deviance(dm, vs), oracle::dense_laplace_deviance(m, joint.beta, joint.u), 1e-6);
  }
}

TEST(Laplace, WithinFivePercentOfQuadrature) {
  // Four random effects, 20 nodes per dimension.
  const auto vs = vs_2a(0.8, 1.2);
  const auto dm = tiny_design(1, 6, 31);
  const auto m = oracle::dense_model(dm, vs);
  const Eigen::Vector2d beta(0.2, 0.4);
  const double laplace_ll = -0.5 * pirls_modes(dm, vs, beta).laplace_deviance();
  const double quad_ll = oracle::quadrature_loglik(m, beta, 20);
  EXPECT_LT(std::abs(laplace_ll - quad_ll), 0.05 * std::abs(quad_ll))
      << "laplace " << laplace_ll << " quadrature " << quad_ll;
  // The rule itself is converged: 20 and 24 nodes agree closely.
  EXPECT_NEAR(quad_ll, oracle::quadrature_loglik(m, beta, 24), 1e-6);
}

TEST(Laplace, WithinFivePercentOfQuadratureWithSlopes) {
  // One person, two items with intercept and slope: five dimensions.
  const auto vs = vs_2b(0.6, 0.9, -0.3, 0.5);
  auto dm = tiny_design(2, 8, 32, 1);
  // Make the lone person treated so the slopes are in play.
  dm.slope.setOnes();
  const auto m = oracle::dense_model(dm, vs);
  const Eigen::Vector2d beta(-0.1, 0.3);
  const double laplace_ll = -0.5 * pirls_modes(dm, vs, beta).laplace_deviance();
  const double quad_ll = oracle::quadrature_loglik(m, beta, 20);
  EXPECT_LT(std::abs(laplace_ll - quad_ll), 0.05 * std::abs(quad_ll));
}

TEST(Quadrature, GaussHermiteRuleIntegratesNormalMoments) {
  const auto qd = oracle::gauss_hermite(20);
  double m0 = 0, m2 = 0, m4 = 0;
  for (int k = 0; k < 20; ++k) {
    m0 += qd.weights(k);
    m2 += qd.weights(k) * std::pow(qd.nodes(k), 2);
    m4 += qd.weights(k) * std::pow(qd.nodes(k), 4);
  }
  EXPECT_NEAR(m0, 1.0, 1e-13);
  EXPECT_NEAR(m2, 1.0, 1e-12);
  EXPECT_NEAR(m4, 3.0, 1e-11);
}

TEST(Pirls, ZeroVarianceCollapsesToLogisticRegression) {
  for (int d : {1, 2}) {
    const auto dm = tiny_design(d, 6, 40 + static_cast<std::uint64_t>(d));
    const auto vs = d == 1 ? vs_2a(0.0, 0.0) : vs_2b(0.0, 0.0, 0.0, 0.0);
    const Eigen::MatrixXd X = dm.X;
    const auto glm = oracle::logistic_regression(X, dm.y);
    // At a fixed beta: modes are zero and the deviance is the GLM deviance.
    const Eigen::Vector2d beta(0.1, -0.2);
    const auto at = pirls_modes(dm, vs, beta);
    EXPECT_LT(at.u.lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_NEAR(at.laplace_deviance(), -2.0 * oracle::bernoulli_loglik(dm.y, X * beta), 1e-8);
    // Profiled: the maximum logistic likelihood.
    LaplaceEngine engine(dm);
    const auto prof = engine.solve(vs);
    EXPECT_NEAR(prof.laplace_deviance(), glm.deviance, 1e-8);
    EXPECT_LT((prof.beta - glm.beta).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(Pirls, DoublingTheDataDoublesTheDeviance) {
  const auto vs = vs_2b(0.7, 1.1, -0.3, 0.6);
  const auto dm = tiny_design(2, 5, 50);
  // Second copy with fresh person and item indices.
  const int n = dm.n_rows();
  DesignMatrices::RowMatrix X2(2 * n, dm.n_fixed());
  X2 << dm.X, dm.X;
  Eigen::VectorXd y2(2 * n), s2(2 * n);
  y2 << dm.y, dm.y;
  s2 << dm.slope, dm.slope;
  std::vector<int> p2 = dm.person, i2 = dm.item;
  for (int r = 0; r < n; ++r) {
    p2.push_back(dm.person[static_cast<std::size_t>(r)] + dm.n_persons());
    i2.push_back(dm.item[static_cast<std::size_t>(r)] + dm.n_items());
  }
  const auto big = make_design(X2, dm.column_names, y2, p2, i2, s2, 2, 2 * dm.n_persons(), 2 * dm.n_items());
  const Eigen::Vector2d beta(0.2, 0.1);
  const auto one = pirls_modes(dm, vs, beta);
  const auto two = pirls_modes(big, vs, beta);
  EXPECT_NEAR(two.laplace_deviance(), 2.0 * one.laplace_deviance(), 1e-8);
  const int np = dm.n_persons();
  for (int j = 0; j < np; ++j) EXPECT_NEAR(two.u(j), two.u(j + np), 1e-9);
  EXPECT_NEAR(two.u(0), one.u(0), 1e-9);
}

TEST(Pirls, SeparationIsFlagged) {
  auto dm = tiny_design(1, 4, 60);
  // y perfectly predicted by the covariate sign, scaled up.
  for (int r = 0; r < dm.n_rows(); ++r) {
    dm.y(r) = dm.X(r, 1) > 0 ? 1.0 : 0.0;
    dm.X(r, 1) *= 50.0;
  }
  const auto res = pirls_modes(dm, vs_2a(0.5, 0.5), Eigen::Vector2d(0.0, 2.0));
  EXPECT_TRUE(res.separation);
}

namespace {

struct FittedPair {
  LongTable table;
  Fit fit;
};

const FittedPair& fitted_2b() {
  static const FittedPair pair = [] {
    FittedPair p{fixtures::simulated(300, 10, 3, 0.4, -0.5, 71), {}};
    ModelSpec spec;
    spec.kind = ModelKind::RsmIlhte;
    p.fit = fit_model(p.table, spec);
    return p;
  }();
  return pair;
}

}  // namespace

TEST(Fit, ReportedQuantitiesAreConsistent) {
  const Fit& f = fitted_2b().fit;
  ASSERT_TRUE(f.converged) << f.message;
  EXPECT_EQ(f.n_obs, expansion_row_count(fitted_2b().table));
  for (std::size_t c = 0; c < f.fixed.size(); ++c) {
    EXPECT_EQ(f.fixed[c].se, std::sqrt(f.fixed_cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c))));
  }
  const double k = static_cast<double>(f.fixed.size() + 4);
  EXPECT_NEAR(f.aic, -2.0 * f.loglik + 2.0 * k, 1e-9);
  EXPECT_NEAR(f.bic, -2.0 * f.loglik + std::log(static_cast<double>(f.n_obs)) * k, 1e-9);
  EXPECT_GE(*f.varcomp.person_var, 0.0);
  EXPECT_GE(*f.varcomp.zeta_var, 0.0);
  const double rho = *f.varcomp.cov_b_zeta / std::sqrt(*f.varcomp.item_var * *f.varcomp.zeta_var);
  EXPECT_LE(std::abs(rho), 1.0 + 1e-12);
  // Column layout of the constant-plus-slopes model.
  std::vector<std::string> names;
  for (const auto& c : f.fixed) names.push_back(c.name);
  EXPECT_EQ(names, (std::vector<std::string>{"(Intercept)", "treatment", "baseline", "threshold2"}));
}

TEST(Fit, EmpiricalBayesShrinkage) {
  const Fit& f = fitted_2b().fit;
  const auto eb = eb_item_effects(f);
  ASSERT_EQ(eb.size(), 10u);
  for (std::size_t i = 1; i < eb.size(); ++i) EXPECT_LT(eb[i - 1].item_id, eb[i].item_id);
  double mean = 0.0;
  for (const auto& e : eb) mean += e.zeta;
  mean /= static_cast<double>(eb.size());
  double var = 0.0;
  for (const auto& e : eb) var += (e.zeta - mean) * (e.zeta - mean);
  var /= static_cast<double>(eb.size());
  EXPECT_LE(var, *f.varcomp.zeta_var);
  for (const auto& e : eb) EXPECT_NEAR(e.total_effect, f.coef(names::kTreatment).estimate + e.zeta, 1e-15);
}

TEST(Fit, EmpiricalBayesSlopesTrackTheTruth) {
  TrueParams truth;
  const LongTable t = fixtures::simulated(1000, 20, 3, 0.4, 0.0, 72, &truth);
  ModelSpec spec;
  spec.kind = ModelKind::RsmIlhte;
  const Fit f = fit_model(t, spec);
  std::vector<double> est, tru;
  for (std::size_t i = 0; i < f.eb_items.size(); ++i) {
    est.push_back(f.eb_items[i].zeta);
    tru.push_back(truth.item_zeta[i]);
  }
  double me = 0, mt = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    me += est[i];
    mt += tru[i];
  }
  me /= static_cast<double>(est.size());
  mt /= static_cast<double>(est.size());
  double s = 0;
  for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - me) * (tru[i] - mt);
  EXPECT_GT(s, 0.0);
}

TEST(Fit, BoundarySlopeVarianceGivesZeroSlopes) {
  // With the slope column of the item factor at zero the slope modes vanish.
  const auto dm = tiny_design(2, 5, 80);
  const auto res = pirls_modes(dm, vs_2b(0.7, 0.9, 0.0, 0.0), Eigen::Vector2d(0.1, 0.2));
  for (int i = 0; i < dm.n_items(); ++i) EXPECT_EQ(res.b(dm.n_persons() + 2 * i + 1), 0.0);
  // And the item-level total effects collapse to the average effect.
  Fit f = fitted_2b().fit;
  f.varcomp.zeta_var = 0.0;
  for (auto& e : f.eb_items) e.zeta = 0.0;
  for (const auto& e : eb_item_effects(f)) {
    EXPECT_EQ(e.total_effect, f.coef(names::kTreatment).estimate);
  }
  f.spec.kind = ModelKind::RsmConstant;
  EXPECT_THROW(eb_item_effects(f), ValidationError);
}

TEST(Fit, Determinism) {
  const LongTable t = fixtures::simulated(200, 8, 3, 0.4, 0.0, 90);
  ModelSpec spec;
  spec.kind = ModelKind::RsmIlhte;
  const Fit a = fit_model(t, spec);
  const Fit b = fit_model(t, spec);
  ASSERT_EQ(a.fixed.size(), b.fixed.size());
  for (std::size_t c = 0; c < a.fixed.size(); ++c) {
    EXPECT_EQ(std::memcmp(&a.fixed[c].estimate, &b.fixed[c].estimate, sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&a.fixed[c].se, &b.fixed[c].se, sizeof(double)), 0);
  }
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_EQ(std::memcmp(&a.loglik, &b.loglik, sizeof(double)), 0);
  EXPECT_EQ(a.n_evaluations, b.n_evaluations);
}

TEST(Fit, AcceptedStepsNeverIncreaseTheObjective) {
  const LongTable t = fixtures::simulated(200, 8, 5, 0.2, 0.0, 91);
  ModelSpec spec;
  spec.kind = ModelKind::RsmIlhte;
  const auto bt = expand_adjacent(t, Expansion::Rsm);
  OptimizerTrace trace;
  const Fit f = fit_glmm(bt, spec, {}, &trace);
  ASSERT_GT(trace.best_values.size(), 5u);
  for (std::size_t s = 1; s < trace.best_values.size(); ++s) {
    EXPECT_LE(trace.best_values[s], trace.best_values[s - 1]);
  }
  EXPECT_NEAR(-2.0 * f.loglik, trace.best_values.back(), 1e-6 * std::abs(f.loglik));
}

TEST(Fit, TranslationEquivariance) {
  const LongTable t = fixtures::simulated(250, 8, 3, 0.4, 0.3, 92);
  const double c = 1.75;
  std::vector<ResponseRow> shifted = t.rows();
  for (auto& r : shifted) r.baseline += c;
  const LongTable t2(t.items(), shifted);
  ModelSpec spec;
  spec.kind = ModelKind::RsmIlhte;
  const Fit a = fit_model(t, spec);
  const Fit b = fit_model(t2, spec);
  const double bx = a.coef(names::kBaseline).estimate;
  EXPECT_NEAR(b.coef(names::kIntercept).estimate, a.coef(names::kIntercept).estimate - bx * c, 1e-6);
  EXPECT_NEAR(b.coef(names::kTreatment).estimate, a.coef(names::kTreatment).estimate, 1e-6);
  EXPECT_NEAR(b.coef(names::kBaseline).estimate, bx, 1e-6);
  EXPECT_NEAR(*b.varcomp.zeta_var, *a.varcomp.zeta_var, 1e-6);
  EXPECT_NEAR(*b.varcomp.item_var, *a.varcomp.item_var, 1e-6);
  EXPECT_NEAR(*b.varcomp.person_var, *a.varcomp.person_var, 1e-6);
  EXPECT_NEAR(b.loglik, a.loglik, 1e-6);
}

TEST(Fit, ZeroTreatmentSlopeModelMatchesConstantModel) {
  // Hand-built design without a treatment column and an all-zero slope
  // covariate: the slope block has no incidence.
  const LongTable t = fixtures::simulated(200, 8, 3, 0.0, 0.0, 93);
  ModelSpec s2a;
  s2a.kind = ModelKind::RsmConstant;
  const auto bt = expand_adjacent(t, Expansion::Rsm);
  DesignMatrices base = build_design(bt, s2a);
  const int tcol = base.column(names::kTreatment);
  ASSERT_GE(tcol, 0);
  DesignMatrices::RowMatrix X(base.n_rows(), base.n_fixed() - 1);
  std::vector<std::string> cols;
  for (int c = 0, k = 0; c < base.n_fixed(); ++c) {
    if (c == tcol) continue;
    X.col(k++) = base.X.col(c);
    cols.push_back(base.column_names[static_cast<std::size_t>(c)]);
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(base.n_rows());
  const auto dm_a = make_design(X, cols, base.y, base.person, base.item, zero, 1, base.n_persons(), base.n_items());
  const auto dm_b = make_design(X, cols, base.y, base.person, base.item, zero, 2, base.n_persons(), base.n_items());
  ModelSpec s2b;
  s2b.kind = ModelKind::RsmIlhte;
  const Fit fa = fit_glmm(dm_a, s2a);
  const Fit fb = fit_glmm(dm_b, s2b);
  EXPECT_TRUE(fb.converged) << fb.message;
  EXPECT_NEAR(fb.loglik, fa.loglik, 1e-4);
  EXPECT_LT(*fb.varcomp.zeta_var, 1e-8);
}

TEST(Fit, NoSlopeVarianceGivesNearZeroSlopeSd) {
  // 200 replications of the smallest MAIN cell generated with sigma_zeta = 0.
  Condition c;
  c.n_persons = 300;
  c.n_items = 8;
  c.k = 3;
  c.sigma_zeta = 0.0;
  std::vector<double> sz;
  for (int r = 0; r < 200; ++r) {
    const auto reps = run_replication(c, 0, r, 77, FitOptions{});
    ASSERT_TRUE(reps[1].sigma_zeta.has_value());
    if (reps[1].converged) sz.push_back(*reps[1].sigma_zeta);
  }
  ASSERT_GE(sz.size(), 180u);
  std::nth_element(sz.begin(), sz.begin() + static_cast<long>(sz.size() / 2), sz.end());
  EXPECT_LT(sz[sz.size() / 2], 0.05);
}

TEST(Fit, SingleItemPersonInterceptMatchesQuadratureOracle) {
  // One item: its random intercept is absorbed by the fixed intercept,
  // leaving a person random-intercept logistic model. Six rows per person
  // with a person sd of 1 keep the optimum away from the boundary.
  const int n_persons = 600, per_person = 6;
  const int n = n_persons * per_person;
  std::mt19937_64 rng(94);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif;
  DesignMatrices::RowMatrix X(n, 2);
  Eigen::VectorXd y(n);
  std::vector<int> person(static_cast<std::size_t>(n)), item(static_cast<std::size_t>(n), 0);
  for (int i = 0, r = 0; i < n_persons; ++i) {
    const double theta = z(rng);
    for (int j = 0; j < per_person; ++j, ++r) {
      const double x = z(rng);
      X.row(r) << 1.0, x;
      y(r) = unif(rng) < 1.0 / (1.0 + std::exp(-(-0.3 + 0.7 * x + theta))) ? 1.0 : 0.0;
      person[static_cast<std::size_t>(r)] = i;
    }
  }
  const DesignMatrices dm = make_design(X, {"(Intercept)", "baseline"}, y, person, item,
                                        Eigen::VectorXd::Zero(n), 1, n_persons, 1);
  ModelSpec spec;
  spec.kind = ModelKind::RsmConstant;
  const Fit f = fit_glmm(dm, spec);
  ASSERT_TRUE(f.converged);

  oracle::PersonModel pm;
  pm.X = dm.X;
  pm.y = dm.y;
  pm.person = dm.person;
  pm.n_persons = dm.n_persons();
  // Same estimator (Laplace, beta at the joint mode), coded per person and
  // optimized by golden section over the person sd.
  const double s_hat = oracle::golden_section(
      [&](double s) { return oracle::person_laplace_deviance(pm, s); }, 0.0, 4.0, 1e-7);
  Eigen::VectorXd beta_hat;
  const double dev = oracle::person_laplace_deviance(pm, s_hat, &beta_hat);
  EXPECT_NEAR(std::sqrt(*f.varcomp.person_var), s_hat, 1e-3);
  for (int c = 0; c < dm.n_fixed(); ++c) EXPECT_NEAR(f.fixed[static_cast<std::size_t>(c)].estimate, beta_hat(c), 1e-3);
  EXPECT_NEAR(-2.0 * f.loglik, dev, 1e-3);
  // One-node adaptive quadrature is the Laplace approximation.
  EXPECT_NEAR(oracle::person_agq_loglik(pm, beta_hat, s_hat, 1), -0.5 * dev, 1e-8);
  // Twenty-node adaptive quadrature at the fitted values is within 5%.
  const double agq = oracle::person_agq_loglik(pm, beta_hat, s_hat, 20);
  EXPECT_LT(std::abs(f.loglik - agq), 0.05 * std::abs(agq));
}

TEST(Design, ColumnSetsPerModel) {
  const LongTable t = simulate_hdrs_like(200, hdrs_params_subscale(), 4);
  const auto bt = expand_adjacent(t, Expansion::Rsm);
  ModelSpec spec;
  spec.kind = ModelKind::RsmConstant;
  const auto a = build_design(bt, spec);
  EXPECT_EQ(a.column_names, (std::vector<std::string>{"(Intercept)", "treatment", "baseline",
                                                      "threshold2", "threshold3", "threshold4"}));
  EXPECT_EQ(a.item_dim, 1);
  spec.kind = ModelKind::RsmIlhte;
  spec.include_tx_by_baseline = true;
  const auto b = build_design(bt, spec);
  EXPECT_EQ(b.item_dim, 2);
  EXPECT_GE(b.column(names::kTxByBaseline), 0);
  spec.kind = ModelKind::RsmSubscale;
  spec.include_tx_by_baseline = false;
  const auto c = build_design(bt, spec);
  EXPECT_GE(c.column(names::kSubscale), 0);
  EXPECT_GE(c.column(names::kTxBySubscale), 0);
  // Incidence: one person and one item intercept per row, slope iff treated.
  const Eigen::SparseMatrix<double> Z = b.random_effects_matrix();
  for (int r = 0; r < b.n_rows(); ++r) {
    int nnz = 0;
    for (int col = 0; col < Z.cols(); ++col) nnz += Z.coeff(r, col) != 0.0;
    EXPECT_EQ(nnz, 2 + (b.slope(r) != 0.0 ? 1 : 0));
    if (r > 50) break;
  }
}

TEST(Design, RejectsSubscaleWithoutFlagsAndCollinearity) {
  const LongTable t = fixtures::simulated(50, 4, 3, 0.0, 0.0, 5);
  const auto bt = expand_adjacent(t, Expansion::Rsm);
  ModelSpec spec;
  spec.kind = ModelKind::RsmSubscale;
  EXPECT_THROW(build_design(bt, spec), ValidationError);
  // All persons untreated: the treatment column is zero.
  std::vector<ResponseRow> rows = t.rows();
  for (auto& r : rows) r.treatment = 0;
  spec.kind = ModelKind::RsmConstant;
  try {
    build_design(expand_adjacent(LongTable(t.items(), rows), Expansion::Rsm), spec);
    FAIL() << "expected a rank error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("treatment"), std::string::npos);
  }
}
