#pragma once

// Adjacent-category expansion: each observed response y* on item i becomes one
// pseudo-binary row per threshold t with y* in {t-1, t}, coded y = [y* == t].

#include <cstddef>
#include <string>
#include <vector>

#include "ilhte/core.hpp"

namespace ilhte {

struct BinaryRow {
  std::size_t person = 0;
  std::size_t item = 0;
  int threshold = 1;  // 1-based
  int y = 0;
  int treatment = 0;
  double baseline = 0.0;
  int subscale = 0;
};

struct BinaryTable {
  Expansion mode = Expansion::Rsm;
  std::vector<BinaryRow> rows;  // ordered by (person, item, threshold)
  std::vector<std::string> person_ids;
  std::vector<ItemInfo> items;
  int max_threshold = 0;  // largest threshold index present in the item layout

  std::size_t n_persons() const { return person_ids.size(); }
  std::size_t n_items() const { return items.size(); }

  /// Names of the threshold indicator columns (threshold 1 is the reference).
  std::vector<std::string> threshold_column_names() const;
  /// Threshold indicator column of a row, or -1 for the reference threshold.
  int threshold_column(const BinaryRow& row) const;
  std::size_t n_threshold_columns() const;
};

/// Expands a validated table. Missing responses contribute no rows.
BinaryTable expand_adjacent(const LongTable& table, Expansion mode);

/// Closed form of the expanded length: each observed response contributes
/// 2 - [y* = 0] - [y* = k - 1] rows.
std::size_t expansion_row_count(const LongTable& table);

void write_binary_csv(std::ostream& out, const BinaryTable& bt);

}  // namespace ilhte
