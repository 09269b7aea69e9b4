#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ilhte/config.hpp"
#include "ilhte/glmm.hpp"
#include "ilhte/results_io.hpp"

using namespace ilhte;

namespace {

std::string message_of(const std::string& json_text) {
  try {
    parse_config(json_text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, EmptyObjectKeepsDefaults) {
  const RunConfig c = parse_config("{}");
  const RunConfig d = default_config();
  EXPECT_EQ(config_to_json(c), config_to_json(d));
  EXPECT_EQ(c.theta_tolerance, 1e-3);
  EXPECT_EQ(c.max_evaluations, 500);
  EXPECT_FALSE(c.n_reps.has_value());
}

TEST(Config, OverridesAndRoundTrip) {
  const RunConfig c = parse_config(R"({"seed": 7, "n_reps": 12, "study": "rho", "inner_tolerance": 1e-9})");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(*c.n_reps, 12);
  EXPECT_EQ(c.study, "rho");
  EXPECT_EQ(c.inner_tolerance, 1e-9);
  EXPECT_EQ(config_to_json(parse_config(config_to_json(c))), config_to_json(c));
  const FitOptions fo = fit_options(c);
  EXPECT_EQ(fo.inner.tolerance, 1e-9);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(message_of(R"({"inner_tolerance": -1})").find("inner_tolerance"), std::string::npos);
  EXPECT_NE(message_of(R"({"bogus": 1})").find("bogus"), std::string::npos);
  EXPECT_NE(message_of(R"({"jobs": "four"})").find("jobs"), std::string::npos);
  EXPECT_NE(message_of(R"({"jobs": 0})").find("jobs"), std::string::npos);
  EXPECT_NE(message_of(R"({"study": "other"})").find("study"), std::string::npos);
  EXPECT_NE(message_of(R"({"seed": -3})").find("seed"), std::string::npos);
  EXPECT_FALSE(message_of("[1, 2]").empty());
  EXPECT_FALSE(message_of("{not json").empty());
  EXPECT_THROW(load_config("/nonexistent/config.json"), ValidationError);
}

TEST(Config, ProvenanceLine) {
  const RunConfig c = default_config();
  const std::string line = provenance_line(c);
  EXPECT_EQ(line.rfind("# ilhte {", 0), 0u);
  EXPECT_EQ(line.back(), '\n');
  EXPECT_EQ(line.find('\n'), line.size() - 1);
}

class FitJson : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const LongTable t = fixtures::simulated(200, 6, 3, 0.3, 0.0, 21);
    ModelSpec spec;
    spec.kind = ModelKind::RsmIlhte;
    fit_ = new Fit(fit_glmm(expand_adjacent(t, Expansion::Rsm), spec, FitOptions{}));
  }
  static void TearDownTestSuite() { delete fit_; }
  static const Fit* fit_;
};
const Fit* FitJson::fit_ = nullptr;

TEST_F(FitJson, RoundTripPreservesEverything) {
  const RunConfig c = default_config();
  const std::map<std::string, std::string> inputs{{"data", "d.csv"}, {"items", "i.csv"}};
  const std::string text = fit_to_json(*fit_, c, inputs);
  const FitRecord rec = fit_from_json(text);
  EXPECT_EQ(rec.inputs, inputs);
  EXPECT_EQ(parse_config(rec.config_json).seed, c.seed);
  const Fit& g = rec.fit;
  EXPECT_EQ(g.spec.kind, fit_->spec.kind);
  ASSERT_EQ(g.fixed.size(), fit_->fixed.size());
  for (std::size_t i = 0; i < g.fixed.size(); ++i) {
    EXPECT_EQ(g.fixed[i].name, fit_->fixed[i].name);
    EXPECT_EQ(g.fixed[i].estimate, fit_->fixed[i].estimate);
    EXPECT_EQ(g.fixed[i].se, fit_->fixed[i].se);
  }
  EXPECT_EQ(g.fixed_cov, fit_->fixed_cov);
  EXPECT_EQ(*g.varcomp.zeta_var, *fit_->varcomp.zeta_var);
  EXPECT_EQ(*g.varcomp.cov_b_zeta, *fit_->varcomp.cov_b_zeta);
  EXPECT_EQ(g.loglik, fit_->loglik);
  EXPECT_EQ(g.theta, fit_->theta);
  ASSERT_EQ(g.eb_items.size(), fit_->eb_items.size());
  EXPECT_EQ(g.eb_items[3].zeta, fit_->eb_items[3].zeta);
  EXPECT_EQ(g.converged, fit_->converged);
  // Serializing the parsed record reproduces the same bytes.
  EXPECT_EQ(fit_to_json(g, parse_config(rec.config_json), rec.inputs), text);
}

TEST_F(FitJson, DeterministicAndSchemaChecked) {
  const RunConfig c = default_config();
  EXPECT_EQ(fit_to_json(*fit_, c, {}), fit_to_json(*fit_, c, {}));
  EXPECT_THROW(fit_from_json(R"({"schema": "other/1"})"), ValidationError);
  EXPECT_THROW(fit_from_json("{}"), ValidationError);
  EXPECT_FALSE(format_fit_table({fit_}).empty());
}

TEST(ParamsJson, RoundTrip) {
  TrueParams p;
  p.sigma_zeta = 0.4;
  p.rho = -0.5;
  p.thresholds = {-0.7, 0.1, 0.9};
  p.item_b = {0.1, -0.3};
  p.item_zeta = {0.05, 0.2};
  const std::string text = params_to_json(p, default_config(), {{"study", "main"}});
  const TrueParams q = params_from_json(text);
  EXPECT_EQ(q.sigma_zeta, p.sigma_zeta);
  EXPECT_EQ(q.rho, p.rho);
  EXPECT_EQ(q.thresholds, p.thresholds);
  EXPECT_EQ(q.item_b, p.item_b);
  EXPECT_EQ(q.item_zeta, p.item_zeta);
  EXPECT_EQ(q.beta1, p.beta1);
}
