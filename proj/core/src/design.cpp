#include <cmath>
#include <limits>
#include <algorithm>
#include <numeric>

#include <Eigen/QR>

#include "ilhte/glmm.hpp"

namespace ilhte {
namespace {

void check_rank(const DesignMatrices& dm) {
  if (dm.n_rows() == 0) throw ValidationError("design: no observations");
  // Rank of X via its Gram matrix; columns are few, rows are many.
  const Eigen::MatrixXd gram = dm.X.transpose() * dm.X;
  Eigen::VectorXd scale = gram.diagonal().cwiseSqrt();
  std::vector<std::string> zero_cols;
  for (int c = 0; c < scale.size(); ++c) {
    if (scale(c) == 0.0) {
      zero_cols.push_back(dm.column_names[static_cast<std::size_t>(c)]);
      scale(c) = 1.0;
    }
  }
  if (!zero_cols.empty()) {
    std::string msg = "design: all-zero fixed-effect column(s):";
    for (const auto& n : zero_cols) msg += " " + n;
    throw ValidationError(msg);
  }
  const Eigen::MatrixXd corr = scale.asDiagonal().inverse() * gram * scale.asDiagonal().inverse();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(corr);
  qr.setThreshold(1e-10);
  if (qr.rank() < corr.cols()) {
    std::string msg = "design: fixed effects are rank deficient; collinear column(s):";
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index c = qr.rank(); c < corr.cols(); ++c) {
      msg += " " + dm.column_names[static_cast<std::size_t>(perm(c))];
    }
    throw ValidationError(msg);
  }
}

void index_persons(DesignMatrices& dm) {
  const int np = dm.n_persons();
  dm.person_start.assign(static_cast<std::size_t>(np) + 1, 0);
  for (int r = 0; r < dm.n_rows(); ++r) {
    if (r > 0 && dm.person[static_cast<std::size_t>(r)] < dm.person[static_cast<std::size_t>(r - 1)]) {
      throw ValidationError("design: rows must be grouped by person in increasing order");
    }
    ++dm.person_start[static_cast<std::size_t>(dm.person[static_cast<std::size_t>(r)]) + 1];
  }
  std::partial_sum(dm.person_start.begin(), dm.person_start.end(), dm.person_start.begin());
}

}  // namespace

int DesignMatrices::column(const std::string& name) const {
  for (std::size_t c = 0; c < column_names.size(); ++c) {
    if (column_names[c] == name) return static_cast<int>(c);
  }
  return -1;
}

Eigen::SparseMatrix<double> DesignMatrices::random_effects_matrix() const {
  const int np = n_persons();
  Eigen::SparseMatrix<double> Z(n_rows(), np + item_dim * n_items());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_rows()) * 3);
  for (int r = 0; r < n_rows(); ++r) {
    const auto ru = static_cast<std::size_t>(r);
    trip.emplace_back(r, person[ru], 1.0);
    const int base = np + item_dim * item[ru];
    trip.emplace_back(r, base, 1.0);
    if (item_dim == 2 && slope(r) != 0.0) trip.emplace_back(r, base + 1, slope(r));
  }
  Z.setFromTriplets(trip.begin(), trip.end());
  return Z;
}

DesignMatrices make_design(DesignMatrices::RowMatrix X, std::vector<std::string> names,
                           Eigen::VectorXd y, std::vector<int> person, std::vector<int> item,
                           Eigen::VectorXd slope, int item_dim, int n_persons, int n_items) {
  DesignMatrices dm;
  dm.X = std::move(X);
  dm.column_names = std::move(names);
  dm.y = std::move(y);
  dm.person = std::move(person);
  dm.item = std::move(item);
  dm.slope = std::move(slope);
  dm.item_dim = item_dim;
  for (int j = 0; j < n_persons; ++j) dm.person_ids.push_back("p" + std::to_string(j));
  for (int i = 0; i < n_items; ++i) dm.item_ids.push_back("i" + std::to_string(i));
  index_persons(dm);
  return dm;
}

DesignMatrices build_design(const BinaryTable& bt, const ModelSpec& spec) {
  if (spec.is_sum_score()) {
    throw ValidationError("build_design: sum-score models have no item-level design");
  }
  const bool subscale = spec.kind == ModelKind::RsmSubscale;
  if (subscale) {
    bool any = false;
    bool all = true;
    for (const auto& it : bt.items) {
      any = any || it.subscale_flag != 0;
      all = all && it.subscale_flag != 0;
    }
    if (!any || all) {
      throw ValidationError("build_design: subscale model needs items with and without the subscale flag");
    }
  }

  DesignMatrices dm;
  dm.item_dim = spec.has_item_slopes() ? 2 : 1;
  dm.person_ids = bt.person_ids;
  for (const auto& it : bt.items) dm.item_ids.push_back(it.item_id);

  dm.column_names = {names::kIntercept, names::kTreatment, names::kBaseline};
  if (spec.include_tx_by_baseline) dm.column_names.push_back(names::kTxByBaseline);
  if (subscale) {
    dm.column_names.push_back(names::kSubscale);
    dm.column_names.push_back(names::kTxBySubscale);
  }
  const int n_base = static_cast<int>(dm.column_names.size());
  for (auto& n : bt.threshold_column_names()) dm.column_names.push_back(std::move(n));

  // Column offset of each item's threshold block under PCM.
  std::vector<int> pcm_offset(bt.n_items() + 1, 0);
  for (std::size_t i = 0; i < bt.n_items(); ++i) {
    pcm_offset[i + 1] = pcm_offset[i] + std::max(0, bt.items[i].n_categories - 2);
  }

  const auto n = static_cast<Eigen::Index>(bt.rows.size());
  const auto p = static_cast<Eigen::Index>(dm.column_names.size());
  dm.X = DesignMatrices::RowMatrix::Zero(n, p);
  dm.y.resize(n);
  dm.slope.resize(n);
  dm.person.resize(static_cast<std::size_t>(n));
  dm.item.resize(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = bt.rows[static_cast<std::size_t>(r)];
    int c = 0;
    dm.X(r, c++) = 1.0;
    dm.X(r, c++) = row.treatment;
    dm.X(r, c++) = row.baseline;
    if (spec.include_tx_by_baseline) dm.X(r, c++) = row.treatment * row.baseline;
    if (subscale) {
      dm.X(r, c++) = row.subscale;
      dm.X(r, c++) = row.subscale * row.treatment;
    }
    if (row.threshold >= 2) {
      const int col = bt.mode == Expansion::Rsm
                          ? row.threshold - 2
                          : pcm_offset[row.item] + row.threshold - 2;
      dm.X(r, n_base + col) = 1.0;
    }
    dm.y(r) = row.y;
    dm.slope(r) = dm.item_dim == 2 ? row.treatment : 0.0;
    dm.person[static_cast<std::size_t>(r)] = static_cast<int>(row.person);
    dm.item[static_cast<std::size_t>(r)] = static_cast<int>(row.item);
  }
  index_persons(dm);
  check_rank(dm);
  return dm;
}

VarianceStructure VarianceStructure::from_theta(const std::vector<double>& theta, int item_dim) {
  if (theta.size() != theta_size(item_dim)) {
    throw ValidationError("variance parameter vector has the wrong length");
  }
  VarianceStructure vs;
  vs.item_dim = item_dim;
  vs.person_sd = theta[0];
  vs.item_factor(0, 0) = theta[1];
  if (item_dim == 2) {
    vs.item_factor(1, 0) = theta[2];
    vs.item_factor(1, 1) = theta[3];
  }
  return vs;
}

std::vector<double> VarianceStructure::theta() const {
  if (item_dim == 1) return {person_sd, item_factor(0, 0)};
  return {person_sd, item_factor(0, 0), item_factor(1, 0), item_factor(1, 1)};
}

std::vector<double> VarianceStructure::lower_bounds(int item_dim) {
  const double inf = std::numeric_limits<double>::infinity();
  if (item_dim == 1) return {0.0, 0.0};
  return {0.0, 0.0, -inf, 0.0};
}

VarianceStructure VarianceStructure::from_varcomp(const VarComp& vc) {
  VarianceStructure vs;
  vs.person_sd = std::sqrt(vc.person_var.value_or(0.0));
  const double var_b = vc.item_var.value_or(0.0);
  vs.item_factor(0, 0) = std::sqrt(var_b);
  if (vc.zeta_var) {
    vs.item_dim = 2;
    const double cov = vc.cov_b_zeta.value_or(0.0);
    const double l21 = var_b > 0.0 ? cov / vs.item_factor(0, 0) : 0.0;
    vs.item_factor(1, 0) = l21;
    vs.item_factor(1, 1) = std::sqrt(std::max(0.0, *vc.zeta_var - l21 * l21));
  }
  return vs;
}

VarComp VarianceStructure::to_varcomp() const {
  VarComp vc;
  vc.person_var = person_sd * person_sd;
  const double l11 = item_factor(0, 0);
  vc.item_var = l11 * l11;
  if (item_dim == 2) {
    const double l21 = item_factor(1, 0);
    const double l22 = item_factor(1, 1);
    vc.zeta_var = l21 * l21 + l22 * l22;
    vc.cov_b_zeta = l11 * l21;
  }
  return vc;
}

}  // namespace ilhte
