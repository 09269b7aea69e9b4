#include "ilhte/core.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace ilhte {

LongTable::LongTable(std::vector<ItemInfo> items, std::vector<ResponseRow> rows)
    : items_(std::move(items)), rows_(std::move(rows)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    item_lookup_.emplace(items_[i].item_id, i);
  }
  row_person_.reserve(rows_.size());
  row_item_.reserve(rows_.size());
  for (const auto& row : rows_) {
    auto [it, inserted] = person_lookup_.emplace(row.person_id, person_ids_.size());
    if (inserted) person_ids_.push_back(row.person_id);
    row_person_.push_back(it->second);
    auto item = item_lookup_.find(row.item_id);
    row_item_.push_back(item == item_lookup_.end() ? npos : item->second);
  }
}

std::optional<std::size_t> LongTable::item_index(const std::string& item_id) const {
  auto it = item_lookup_.find(item_id);
  if (it == item_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t LongTable::person_index(const std::string& person_id) const {
  auto it = person_lookup_.find(person_id);
  if (it == person_lookup_.end()) {
    throw ValidationError("unknown person id '" + person_id + "'");
  }
  return it->second;
}

const char* to_string(ViolationRule rule) {
  switch (rule) {
    case ViolationRule::UnknownItem: return "unknown_item";
    case ViolationRule::ResponseOutOfRange: return "response_out_of_range";
    case ViolationRule::DuplicatePair: return "duplicate_person_item";
    case ViolationRule::TreatmentNotBinary: return "treatment_not_binary";
    case ViolationRule::TreatmentVaries: return "treatment_varies_within_person";
    case ViolationRule::BaselineVaries: return "baseline_varies_within_person";
    case ViolationRule::SubscaleMismatch: return "subscale_flag_mismatch";
    case ViolationRule::TooFewCategories: return "too_few_categories";
    case ViolationRule::DuplicateItem: return "duplicate_item_metadata";
  }
  return "unknown";
}

std::vector<Violation> validate(const LongTable& table) {
  std::vector<Violation> out;
  const auto& items = table.items();
  {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!seen.insert(items[i].item_id).second) {
        out.push_back({i, ViolationRule::DuplicateItem,
                       "item '" + items[i].item_id + "' listed twice in metadata"});
      }
      if (items[i].n_categories < 2) {
        out.push_back({i, ViolationRule::TooFewCategories,
                       "item '" + items[i].item_id + "' has fewer than 2 categories"});
      }
    }
  }

  struct PersonState {
    int treatment;
    double baseline;
    std::size_t first_row;
  };
  std::vector<std::optional<PersonState>> persons(table.n_persons());
  std::set<std::pair<std::size_t, std::size_t>> pairs;

  const auto& rows = table.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t p = table.row_person_index()[r];
    const std::size_t i = table.row_item_index()[r];

    if (row.treatment != 0 && row.treatment != 1) {
      out.push_back({r, ViolationRule::TreatmentNotBinary,
                     "treatment must be 0 or 1, got " + std::to_string(row.treatment)});
    }
    auto& state = persons[p];
    if (!state) {
      state = PersonState{row.treatment, row.baseline, r};
    } else {
      if (state->treatment != row.treatment) {
        out.push_back({r, ViolationRule::TreatmentVaries,
                       "treatment differs from row " + std::to_string(state->first_row) +
                           " for person '" + row.person_id + "'"});
      }
      // Bitwise comparison: values come from the same source column.
      if (!(state->baseline == row.baseline) &&
          !(std::isnan(state->baseline) && std::isnan(row.baseline))) {
        out.push_back({r, ViolationRule::BaselineVaries,
                       "baseline differs from row " + std::to_string(state->first_row) +
                           " for person '" + row.person_id + "'"});
      }
    }

    if (i == LongTable::npos) {
      out.push_back({r, ViolationRule::UnknownItem,
                     "item '" + row.item_id + "' is not in the item metadata"});
      continue;
    }
    if (!pairs.emplace(p, i).second) {
      out.push_back({r, ViolationRule::DuplicatePair,
                     "person '" + row.person_id + "' answers item '" + row.item_id +
                         "' more than once"});
    }
    const auto& info = items[i];
    if (row.response && (*row.response < 0 || *row.response >= info.n_categories)) {
      out.push_back({r, ViolationRule::ResponseOutOfRange,
                     "response " + std::to_string(*row.response) + " outside [0, " +
                         std::to_string(info.n_categories - 1) + "] for item '" +
                         info.item_id + "'"});
    }
    if (row.subscale_flag != info.subscale_flag) {
      out.push_back({r, ViolationRule::SubscaleMismatch,
                     "row subscale flag disagrees with metadata for item '" +
                         info.item_id + "'"});
    }
  }
  return out;
}

void require_valid(const LongTable& table) {
  const auto violations = validate(table);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << violations.size() << " validation error(s)";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t v = 0; v < shown; ++v) {
    msg << "\n  row " << violations[v].row << " [" << to_string(violations[v].rule)
        << "]: " << violations[v].message;
  }
  throw ValidationError(msg.str());
}

SumScores sum_scores(const LongTable& table) {
  if (table.n_rows() == 0) throw ValidationError("sum_scores: empty table");

  const std::size_t np = table.n_persons();
  std::vector<double> raw(np, 0.0);
  std::vector<int> answered(np, 0);
  std::vector<char> incomplete(np, 0);
  std::vector<int> treatment(np, 0);
  std::vector<double> baseline(np, 0.0);

  const auto& rows = table.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t p = table.row_person_index()[r];
    treatment[p] = rows[r].treatment;
    baseline[p] = rows[r].baseline;
    if (rows[r].response) {
      raw[p] += *rows[r].response;
      ++answered[p];
    } else {
      incomplete[p] = 1;
    }
  }

  SumScores out;
  const int n_items = static_cast<int>(table.n_items());
  for (std::size_t p = 0; p < np; ++p) {
    if (incomplete[p] || answered[p] != n_items) {
      out.incomplete_persons.push_back(table.person_ids()[p]);
      continue;
    }
    out.person_ids.push_back(table.person_ids()[p]);
    out.raw.push_back(raw[p]);
    out.treatment.push_back(treatment[p]);
    out.baseline.push_back(baseline[p]);
  }
  const std::size_t n = out.raw.size();
  if (n < 2) throw ValidationError("sum_scores: fewer than two complete persons");

  double mean = 0.0;
  for (double v : out.raw) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : out.raw) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) {
    throw ValidationError("sum_scores: all included persons have the same sum score");
  }
  out.mean = mean;
  out.sd = sd;
  out.standardized.reserve(n);
  for (double v : out.raw) out.standardized.push_back((v - mean) / sd);
  return out;
}

void check_params(const TrueParams& params) {
  for (std::size_t h = 1; h < params.thresholds.size(); ++h) {
    if (!(params.thresholds[h] > params.thresholds[h - 1])) {
      throw ValidationError("thresholds must be strictly increasing");
    }
  }
  if (params.sigma_theta < 0 || params.sigma_b < 0 || params.sigma_zeta < 0) {
    throw ValidationError("standard deviations must be non-negative");
  }
  if (!(std::abs(params.rho) <= 1.0)) {
    throw ValidationError("rho must lie in [-1, 1]");
  }
  if (params.item_b.size() != params.item_zeta.size()) {
    throw ValidationError("item_b and item_zeta must have equal length");
  }
}

const char* model_label(ModelKind kind) {
  switch (kind) {
    case ModelKind::SumOlsConstant: return "1A";
    case ModelKind::SumOlsInteract: return "1B";
    case ModelKind::RsmConstant: return "2A";
    case ModelKind::RsmIlhte: return "2B";
    case ModelKind::RsmSubscale: return "2C";
  }
  return "?";
}

ModelKind parse_model_label(const std::string& label) {
  static const std::map<std::string, ModelKind> table = {
      {"1A", ModelKind::SumOlsConstant}, {"1B", ModelKind::SumOlsInteract},
      {"2A", ModelKind::RsmConstant},    {"2B", ModelKind::RsmIlhte},
      {"2C", ModelKind::RsmSubscale}};
  auto it = table.find(label);
  if (it == table.end()) throw ValidationError("unknown model '" + label + "'");
  return it->second;
}

const char* expansion_label(Expansion mode) {
  return mode == Expansion::Rsm ? "rsm" : "pcm";
}

Expansion parse_expansion(const std::string& label) {
  if (label == "rsm") return Expansion::Rsm;
  if (label == "pcm") return Expansion::Pcm;
  throw ValidationError("unknown expansion '" + label + "' (expected rsm or pcm)");
}

const Coefficient* Fit::find(const std::string& name) const {
  for (const auto& c : fixed) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Coefficient& Fit::coef(const std::string& name) const {
  const Coefficient* c = find(name);
  if (c == nullptr) throw ValidationError("fit has no coefficient '" + name + "'");
  return *c;
}

}  // namespace ilhte
