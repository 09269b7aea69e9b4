#pragma once

// Cross-classified Bernoulli mixed models on adjacent-category pseudo data:
// a random intercept per person crossed with a random intercept (and
// optionally a correlated treatment slope) per item, fitted by maximizing the
// Laplace approximation to the marginal likelihood.
//
// Random effects are handled in spherical form b = Lambda u with u ~ N(0, I).
// The person block is scalar (sd s), the item block is a lower-triangular
// factor L with (b_i, zeta_i) = L w_i.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "ilhte/core.hpp"
#include "ilhte/expand.hpp"

namespace ilhte {

struct DesignMatrices {
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  RowMatrix X;                          // fixed effects, one row per pseudo observation
  std::vector<std::string> column_names;
  Eigen::VectorXd y;
  std::vector<int> person;              // dense person index per row
  std::vector<int> item;                // dense item index per row
  Eigen::VectorXd slope;                // item-slope covariate (treatment) per row
  int item_dim = 1;                     // 1: intercept, 2: intercept + treatment slope
  std::vector<std::string> person_ids;
  std::vector<std::string> item_ids;
  std::vector<std::size_t> person_start;  // rows of person j: [start[j], start[j+1])

  int n_rows() const { return static_cast<int>(y.size()); }
  int n_fixed() const { return static_cast<int>(X.cols()); }
  int n_persons() const { return static_cast<int>(person_ids.size()); }
  int n_items() const { return static_cast<int>(item_ids.size()); }
  int column(const std::string& name) const;  // -1 when absent

  /// Random-effects incidence Z with columns [persons | item blocks]; item i
  /// occupies columns n_persons + item_dim * i (+1 for the slope).
  Eigen::SparseMatrix<double> random_effects_matrix() const;
};

/// Builds the fixed and random design for a rating-scale model kind.
/// Throws ValidationError on rank deficiency (naming the collinear columns) or
/// when a subscale model is requested on data without subscale variation.
DesignMatrices build_design(const BinaryTable& bt, const ModelSpec& spec);

/// Assembles a design from raw parts and sorts nothing: rows must already be
/// grouped by person. Used for small hand-built instances.
DesignMatrices make_design(DesignMatrices::RowMatrix X, std::vector<std::string> names,
                           Eigen::VectorXd y, std::vector<int> person, std::vector<int> item,
                           Eigen::VectorXd slope, int item_dim, int n_persons, int n_items);

/// Variance parameters in Cholesky form.
struct VarianceStructure {
  int item_dim = 1;
  double person_sd = 0.0;
  Eigen::Matrix2d item_factor = Eigen::Matrix2d::Zero();  // lower triangular

  /// theta = (s, L11) or (s, L11, L21, L22).
  static VarianceStructure from_theta(const std::vector<double>& theta, int item_dim);
  std::vector<double> theta() const;
  static std::size_t theta_size(int item_dim) { return item_dim == 1 ? 2 : 4; }
  /// Lower bounds for theta: diagonal entries are non-negative.
  static std::vector<double> lower_bounds(int item_dim);

  /// Exact inverse of to_varcomp on the interior (cov entries need item_dim 2).
  static VarianceStructure from_varcomp(const VarComp& vc);
  VarComp to_varcomp() const;
};

struct PirlsOptions {
  double tolerance = 1e-8;   // relative change in penalized deviance
  int max_iterations = 100;
  int max_step_halvings = 12;
};

/// Factor of the conditional information Lambda' Z' W Z Lambda + I, stored as
/// the person diagonal plus the dense Cholesky factor of the Schur complement
/// over the item block (and the fixed effects, when they are profiled).
struct ConditionalFactor {
  Eigen::VectorXd person_diag;
  Eigen::MatrixXd schur_lower;
  int item_block_size = 0;

  double log_determinant() const;
};

struct PirlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd u;      // spherical modes: persons then item blocks
  Eigen::VectorXd b;      // Lambda u on the original scale
  double residual_deviance = 0.0;   // -2 sum log p(y | eta)
  double penalty = 0.0;             // |u|^2
  double log_det = 0.0;
  ConditionalFactor factor;
  Eigen::MatrixXd fixed_cov;        // empty when beta was held fixed
  int iterations = 0;
  bool converged = false;
  bool separation = false;          // some |eta| > 30 at the modes

  double penalized_deviance() const { return residual_deviance + penalty; }
  double laplace_deviance() const { return residual_deviance + penalty + log_det; }
};

/// Penalized IRLS with an internal warm start. One engine serves one design
/// and one thread.
class LaplaceEngine {
 public:
  explicit LaplaceEngine(const DesignMatrices& dm, PirlsOptions options = {});
  LaplaceEngine(const LaplaceEngine&) = delete;
  LaplaceEngine& operator=(const LaplaceEngine&) = delete;

  /// Joint conditional modes of (beta, u); beta is profiled.
  PirlsResult solve(const VarianceStructure& vs);
  /// Conditional modes of u for a fixed beta.
  PirlsResult solve_fixed_beta(const VarianceStructure& vs, const Eigen::VectorXd& beta);

  void reset();
  int total_iterations() const { return total_iterations_; }

 private:
  PirlsResult run(const VarianceStructure& vs, bool profile_beta);

  const DesignMatrices& dm_;
  PirlsOptions options_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd u_;
  int total_iterations_ = 0;
};

PirlsResult pirls_modes(const DesignMatrices& dm, const VarianceStructure& vs,
                        const Eigen::VectorXd& beta, PirlsOptions options = {});

/// -2 log of the Laplace-approximate marginal likelihood, with beta at the
/// joint conditional mode.
double laplace_deviance(const DesignMatrices& dm, const VarianceStructure& vs,
                        PirlsOptions options = {});

struct FitOptions {
  double outer_tolerance = 1e-6;   // relative spread of simplex deviances
  double theta_tolerance = 1e-3;   // simplex diameter in theta
  int max_evaluations = 500;
  int restarts = 2;                // jittered restarts after the first run
  std::uint64_t seed = 0x5eed;
  PirlsOptions inner;
};

struct OptimizerTrace {
  std::vector<double> best_values;  // best objective after each accepted step
  int evaluations = 0;
  int restarts_used = 0;
  bool converged = false;
};

/// Fits an RSM-family model (2A, 2B, 2C) on expanded data.
Fit fit_glmm(const BinaryTable& bt, const ModelSpec& spec, const FitOptions& options = {},
             OptimizerTrace* trace = nullptr);

/// Same, on a prebuilt design.
Fit fit_glmm(const DesignMatrices& dm, const ModelSpec& spec, const FitOptions& options = {},
             OptimizerTrace* trace = nullptr);

struct ItemTreatmentEffect {
  std::string item_id;
  double location = 0.0;      // b_i
  double total_effect = 0.0;  // beta1 + zeta_i
  double zeta = 0.0;
};

/// Empirical Bayes item effects sorted by item id. Requires item slopes.
std::vector<ItemTreatmentEffect> eb_item_effects(const Fit& fit);

}  // namespace ilhte
