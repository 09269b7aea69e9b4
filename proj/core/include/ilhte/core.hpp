#pragma once

// Shared domain types: long-format response tables, generating parameters,
// model specifications and fit results.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace ilhte {

/// Thrown when input data or arguments violate a documented precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ItemInfo {
  std::string item_id;
  int n_categories = 2;
  int subscale_flag = 0;
};

struct ResponseRow {
  std::string person_id;
  std::string item_id;
  std::optional<int> response;  // category 0..k-1, empty when missing
  int treatment = 0;
  double baseline = 0.0;
  int subscale_flag = 0;
  std::optional<std::string> trial_id;
};

/// Person x item long-format polytomous responses with item metadata.
///
/// The table is immutable once built. Person and item ids are opaque strings;
/// items are indexed in metadata order and persons in order of first
/// appearance, so the dense indices are stable for a given input.
class LongTable {
 public:
  LongTable() = default;
  LongTable(std::vector<ItemInfo> items, std::vector<ResponseRow> rows);

  const std::vector<ItemInfo>& items() const { return items_; }
  const std::vector<ResponseRow>& rows() const { return rows_; }
  const std::vector<std::string>& person_ids() const { return person_ids_; }

  std::size_t n_items() const { return items_.size(); }
  std::size_t n_persons() const { return person_ids_.size(); }
  std::size_t n_rows() const { return rows_.size(); }

  /// Dense item index, or nullopt for ids missing from the metadata.
  std::optional<std::size_t> item_index(const std::string& item_id) const;
  std::size_t person_index(const std::string& person_id) const;

  /// Dense person/item index per row (item index is npos for unknown items).
  const std::vector<std::size_t>& row_person_index() const { return row_person_; }
  const std::vector<std::size_t>& row_item_index() const { return row_item_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<ItemInfo> items_;
  std::vector<ResponseRow> rows_;
  std::vector<std::string> person_ids_;
  std::unordered_map<std::string, std::size_t> item_lookup_;
  std::unordered_map<std::string, std::size_t> person_lookup_;
  std::vector<std::size_t> row_person_;
  std::vector<std::size_t> row_item_;
};

enum class ViolationRule {
  UnknownItem,
  ResponseOutOfRange,
  DuplicatePair,
  TreatmentNotBinary,
  TreatmentVaries,
  BaselineVaries,
  SubscaleMismatch,
  TooFewCategories,
  DuplicateItem,
};

const char* to_string(ViolationRule rule);

struct Violation {
  std::size_t row = 0;  // row index, or item index for metadata rules
  ViolationRule rule = ViolationRule::UnknownItem;
  std::string message;
};

/// Checks every LongTable invariant; an empty result means the table is valid.
std::vector<Violation> validate(const LongTable& table);

/// Throws ValidationError carrying the first few violations, if any.
void require_valid(const LongTable& table);

struct SumScores {
  std::vector<std::string> person_ids;   // included persons, table order
  std::vector<double> raw;
  std::vector<double> standardized;      // (raw - mean) / sample SD
  std::vector<int> treatment;
  std::vector<double> baseline;
  std::vector<std::string> incomplete_persons;  // excluded for missing items
  double mean = 0.0;
  double sd = 0.0;
};

/// Raw and standardized sum scores over complete-case persons. Standardization
/// uses the analysis sample mean and the n-1 standard deviation.
SumScores sum_scores(const LongTable& table);

/// Complete data-generating parameter set for the rating scale model with
/// item-level treatment heterogeneity.
struct TrueParams {
  double beta0 = 0.0;
  double beta1 = 0.2;
  double beta_cov = 1.0;
  double beta_interact = 0.0;
  double sigma_theta = 0.5;
  double sigma_b = 1.0;
  double sigma_zeta = 0.0;
  double rho = 0.0;
  std::vector<double> thresholds;  // tau_1 < ... < tau_{k-1}
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  std::vector<double> item_b;
  std::vector<double> item_zeta;

  double cov_b_zeta() const { return rho * sigma_b * sigma_zeta; }
};

/// Throws ValidationError when thresholds are not strictly increasing, a scale
/// is negative, or |rho| > 1.
void check_params(const TrueParams& params);

enum class ModelKind {
  SumOlsConstant,   // 1A
  SumOlsInteract,   // 1B
  RsmConstant,      // 2A
  RsmIlhte,         // 2B
  RsmSubscale,      // 2C
};

enum class Expansion { Rsm, Pcm };

struct ModelSpec {
  ModelKind kind = ModelKind::RsmConstant;
  Expansion expansion = Expansion::Rsm;
  bool include_tx_by_baseline = false;

  bool is_sum_score() const {
    return kind == ModelKind::SumOlsConstant || kind == ModelKind::SumOlsInteract;
  }
  bool has_item_slopes() const {
    return kind == ModelKind::RsmIlhte || kind == ModelKind::RsmSubscale;
  }
};

const char* model_label(ModelKind kind);   // "1A" ... "2C"
ModelKind parse_model_label(const std::string& label);
const char* expansion_label(Expansion mode);  // "rsm" / "pcm"
Expansion parse_expansion(const std::string& label);

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
};

struct VarComp {
  std::optional<double> person_var;
  std::optional<double> item_var;
  std::optional<double> zeta_var;
  std::optional<double> cov_b_zeta;
};

struct ItemEffect {
  std::string item_id;
  double b = 0.0;
  double zeta = 0.0;
  double sd_b = 0.0;
  double sd_zeta = 0.0;
};

struct Fit {
  ModelSpec spec;
  std::vector<Coefficient> fixed;
  Eigen::MatrixXd fixed_cov;
  VarComp varcomp;
  std::vector<ItemEffect> eb_items;  // metadata order
  std::vector<std::string> item_ids;
  std::vector<std::string> person_ids;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double r_squared = 0.0;  // sum-score models only
  std::size_t n_obs = 0;
  std::size_t n_excluded = 0;
  std::size_t n_variance_params = 0;
  bool converged = false;
  int n_evaluations = 0;
  std::vector<double> theta;  // optimizer parameter vector at the optimum
  std::string message;

  const Coefficient* find(const std::string& name) const;
  const Coefficient& coef(const std::string& name) const;
};

/// Coefficient names shared by every model family.
namespace names {
inline constexpr const char* kIntercept = "(Intercept)";
inline constexpr const char* kTreatment = "treatment";
inline constexpr const char* kBaseline = "baseline";
inline constexpr const char* kTxByBaseline = "treatment:baseline";
inline constexpr const char* kSubscale = "subscale";
inline constexpr const char* kTxBySubscale = "treatment:subscale";
}  // namespace names

}  // namespace ilhte
