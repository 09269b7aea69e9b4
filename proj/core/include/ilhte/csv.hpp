#pragma once

// CSV ingestion and emission for long-format tables.
//
//   responses: person_id,item_id,response,treatment,baseline,subscale_flag[,trial_id]
//   items:     item_id,n_categories,subscale_flag
//
// A missing response is an empty field. Reals are written in shortest
// round-trip form so a write/read cycle is bit-exact.

#include <iosfwd>
#include <string>
#include <vector>

#include "ilhte/core.hpp"

namespace ilhte {

std::vector<ItemInfo> read_items_csv(std::istream& in);
std::vector<ItemInfo> read_items_csv_file(const std::string& path);
void write_items_csv(std::ostream& out, const std::vector<ItemInfo>& items);

LongTable read_long_csv(std::istream& in, std::vector<ItemInfo> items);
LongTable read_long_csv_file(const std::string& path, std::vector<ItemInfo> items);
void write_long_csv(std::ostream& out, const LongTable& table);
void write_long_csv_file(const std::string& path, const LongTable& table);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_real(double value);
double parse_real(const std::string& text);

/// Splits one CSV line on commas. Quoting is not supported; ids must not
/// contain commas.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace ilhte
