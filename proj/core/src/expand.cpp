#include "ilhte/expand.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "ilhte/csv.hpp"

namespace ilhte {

std::vector<std::string> BinaryTable::threshold_column_names() const {
  std::vector<std::string> out;
  if (mode == Expansion::Rsm) {
    for (int t = 2; t <= max_threshold; ++t) out.push_back("threshold" + std::to_string(t));
  } else {
    for (const auto& it : items) {
      for (int t = 2; t <= it.n_categories - 1; ++t) {
        out.push_back("threshold" + std::to_string(t) + ":" + it.item_id);
      }
    }
  }
  return out;
}

std::size_t BinaryTable::n_threshold_columns() const {
  if (mode == Expansion::Rsm) return max_threshold >= 2 ? max_threshold - 1 : 0;
  std::size_t n = 0;
  for (const auto& it : items) n += it.n_categories > 2 ? it.n_categories - 2 : 0;
  return n;
}

int BinaryTable::threshold_column(const BinaryRow& row) const {
  if (row.threshold < 2) return -1;
  if (mode == Expansion::Rsm) return row.threshold - 2;
  int offset = 0;
  for (std::size_t i = 0; i < row.item; ++i) {
    offset += std::max(0, items[i].n_categories - 2);
  }
  return offset + row.threshold - 2;
}

BinaryTable expand_adjacent(const LongTable& table, Expansion mode) {
  for (const auto& it : table.items()) {
    if (it.n_categories < 2) {
      throw ValidationError("expand: item '" + it.item_id + "' has fewer than 2 categories");
    }
  }
  require_valid(table);

  BinaryTable bt;
  bt.mode = mode;
  bt.person_ids = table.person_ids();
  bt.items = table.items();
  for (const auto& it : bt.items) bt.max_threshold = std::max(bt.max_threshold, it.n_categories - 1);

  // Stable order by (person, item) regardless of input row order.
  std::vector<std::size_t> order(table.n_rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& pidx = table.row_person_index();
  const auto& iidx = table.row_item_index();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pidx[a] != pidx[b]) return pidx[a] < pidx[b];
    return iidx[a] < iidx[b];
  });

  bt.rows.reserve(expansion_row_count(table));
  for (std::size_t r : order) {
    const auto& src = table.rows()[r];
    if (!src.response) continue;
    const int ystar = *src.response;
    const int k = bt.items[iidx[r]].n_categories;
    for (int t = std::max(1, ystar); t <= std::min(k - 1, ystar + 1); ++t) {
      BinaryRow row;
      row.person = pidx[r];
      row.item = iidx[r];
      row.threshold = t;
      row.y = ystar == t ? 1 : 0;
      row.treatment = src.treatment;
      row.baseline = src.baseline;
      row.subscale = src.subscale_flag;
      bt.rows.push_back(row);
    }
  }
  return bt;
}

std::size_t expansion_row_count(const LongTable& table) {
  std::size_t count = 0;
  const auto& iidx = table.row_item_index();
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    const auto& row = table.rows()[r];
    if (!row.response || iidx[r] == LongTable::npos) continue;
    const int k = table.items()[iidx[r]].n_categories;
    count += 2 - (*row.response == 0 ? 1 : 0) - (*row.response == k - 1 ? 1 : 0);
  }
  return count;
}

void write_binary_csv(std::ostream& out, const BinaryTable& bt) {
  out << "person_id,item_id,threshold,y,treatment,baseline,subscale_flag\n";
  for (const auto& row : bt.rows) {
    out << bt.person_ids[row.person] << ',' << bt.items[row.item].item_id << ','
        << row.threshold << ',' << row.y << ',' << row.treatment << ','
        << format_real(row.baseline) << ',' << row.subscale << '\n';
  }
}

}  // namespace ilhte
