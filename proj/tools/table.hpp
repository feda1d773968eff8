#pragma once

// Tabular output shared by the CLI subcommands: CSV or JSON, with doubles
// printed in shortest round-trip form.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace vasculink::cli {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Cell = std::variant<std::string, double, std::uint64_t>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

inline std::string csv_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string quoted = "\"";
    for (char ch : *s) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    return quoted + "\"";
  }
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return std::to_string(std::get<std::uint64_t>(c));
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << '\n';
  }
}

inline nlohmann::ordered_json json_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::get<std::uint64_t>(c);
}

/// Array of row objects, keys in column order.
inline void write_json(std::ostream& os, const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = json_cell(row[i]);
    arr.push_back(std::move(obj));
  }
  os << arr.dump(2) << '\n';
}

/// Two-column key/value listing; JSON renders it as one flat object.
struct KeyValues {
  std::vector<std::pair<std::string, Cell>> entries;

  void add(std::string key, Cell value) { entries.emplace_back(std::move(key), std::move(value)); }
};

inline void write_csv(std::ostream& os, const KeyValues& kv) {
  os << "key,value\n";
  for (const auto& [k, v] : kv.entries) os << k << ',' << csv_cell(v) << '\n';
}

inline void write_json(std::ostream& os, const KeyValues& kv) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (const auto& [k, v] : kv.entries) obj[k] = json_cell(v);
  os << obj.dump(2) << '\n';
}

}  // namespace vasculink::cli
