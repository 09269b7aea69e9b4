#include "ilhte/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <system_error>

namespace ilhte {
namespace {

int parse_int(const std::string& text, const char* field, std::size_t line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("line " + std::to_string(line) + ": bad integer in " + field +
                          ": '" + text + "'");
  }
  return value;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Next line that is neither blank nor a '#' comment (provenance header).
bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty() || line.front() == '#') continue;
    return true;
  }
  return false;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return in;
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_real failed");
  return std::string(buf, ptr);
}

double parse_real(const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("bad real number '" + text + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::vector<ItemInfo> read_items_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw ValidationError("items csv: missing header");
  if (line != "item_id,n_categories,subscale_flag") {
    throw ValidationError("items csv: unexpected header '" + line + "'");
  }
  std::vector<ItemInfo> items;
  while (next_line(in, line, lineno)) {
    const auto f = split_csv_line(line);
    if (f.size() != 3) {
      throw ValidationError("items csv line " + std::to_string(lineno) +
                            ": expected 3 fields");
    }
    items.push_back({f[0], parse_int(f[1], "n_categories", lineno),
                     parse_int(f[2], "subscale_flag", lineno)});
  }
  return items;
}

std::vector<ItemInfo> read_items_csv_file(const std::string& path) {
  auto in = open_input(path);
  return read_items_csv(in);
}

void write_items_csv(std::ostream& out, const std::vector<ItemInfo>& items) {
  out << "item_id,n_categories,subscale_flag\n";
  for (const auto& it : items) {
    out << it.item_id << ',' << it.n_categories << ',' << it.subscale_flag << '\n';
  }
}

LongTable read_long_csv(std::istream& in, std::vector<ItemInfo> items) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_line(in, line, lineno)) throw ValidationError("long csv: missing header");
  bool has_trial = false;
  if (line == "person_id,item_id,response,treatment,baseline,subscale_flag,trial_id") {
    has_trial = true;
  } else if (line != "person_id,item_id,response,treatment,baseline,subscale_flag") {
    throw ValidationError("long csv: unexpected header '" + line + "'");
  }
  const std::size_t n_fields = has_trial ? 7 : 6;

  std::vector<ResponseRow> rows;
  while (next_line(in, line, lineno)) {
    auto f = split_csv_line(line);
    if (f.size() != n_fields) {
      throw ValidationError("long csv line " + std::to_string(lineno) + ": expected " +
                            std::to_string(n_fields) + " fields, got " +
                            std::to_string(f.size()));
    }
    ResponseRow row;
    row.person_id = std::move(f[0]);
    row.item_id = std::move(f[1]);
    if (!f[2].empty() && f[2] != "NA") row.response = parse_int(f[2], "response", lineno);
    row.treatment = parse_int(f[3], "treatment", lineno);
    try {
      row.baseline = parse_real(f[4]);
    } catch (const ValidationError&) {
      throw ValidationError("long csv line " + std::to_string(lineno) +
                            ": bad baseline '" + f[4] + "'");
    }
    row.subscale_flag = parse_int(f[5], "subscale_flag", lineno);
    if (has_trial && !f[6].empty()) row.trial_id = std::move(f[6]);
    rows.push_back(std::move(row));
  }
  return LongTable(std::move(items), std::move(rows));
}

LongTable read_long_csv_file(const std::string& path, std::vector<ItemInfo> items) {
  auto in = open_input(path);
  return read_long_csv(in, std::move(items));
}

void write_long_csv(std::ostream& out, const LongTable& table) {
  bool has_trial = false;
  for (const auto& row : table.rows()) {
    if (row.trial_id) {
      has_trial = true;
      break;
    }
  }
  out << "person_id,item_id,response,treatment,baseline,subscale_flag";
  if (has_trial) out << ",trial_id";
  out << '\n';
  for (const auto& row : table.rows()) {
    out << row.person_id << ',' << row.item_id << ',';
    if (row.response) out << *row.response;
    out << ',' << row.treatment << ',' << format_real(row.baseline) << ','
        << row.subscale_flag;
    if (has_trial) {
      out << ',';
      if (row.trial_id) out << *row.trial_id;
    }
    out << '\n';
  }
}

void write_long_csv_file(const std::string& path, const LongTable& table) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  write_long_csv(out, table);
}

}  // namespace ilhte
