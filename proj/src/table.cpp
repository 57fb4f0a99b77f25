#include "detrank/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "detrank/error.hpp"
#include "detrank/io.hpp"

namespace detrank {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "N/A" || cell == "NA" || cell == "n/a" || cell == "nan";
}

std::optional<double> parse_number(std::string_view cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(field_quoted ? field : trim(field));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      if (!trim(field).empty()) {
        throw FormatError(std::string(source) + ":" + std::to_string(line) +
                          ": quote inside unquoted field");
      }
      field.clear();
      in_quotes = true;
      field_quoted = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_record();
      ++line;
    } else if (ch != '\r' || field_quoted) {
      if (!field_quoted) field.push_back(ch);
    }
  }
  if (in_quotes) throw FormatError(std::string(source) + ": unterminated quoted field");
  if (!field.empty() || !record.empty() || field_quoted) end_record();

  if (records.empty()) throw FormatError(std::string(source) + ": empty CSV");
  CsvTable table;
  table.header = std::move(records.front());
  std::set<std::string> seen;
  for (const auto& h : table.header) {
    if (!seen.insert(h).second) {
      throw FormatError(std::string(source) + ": duplicate column '" + h + "'");
    }
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw FormatError(std::string(source) + ": row " + std::to_string(r) + " has " +
                        std::to_string(records[r].size()) + " fields, header has " +
                        std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file_text(path), path.string());
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char ch : value) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string join_csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_field(fields[i]);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::optional<std::size_t> ScoreTable::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

std::optional<std::size_t> ScoreTable::row(std::string_view id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

ScoreTable to_score_table(const CsvTable& table, std::string_view source) {
  std::vector<std::size_t> id_columns;
  if (auto c = table.column("model_name")) {
    id_columns = {*c};
  } else if (auto m = table.column("model")) {
    id_columns = {*m};
    if (auto b = table.column("backbone")) id_columns.push_back(*b);
  } else {
    if (table.header.empty()) throw FormatError(std::string(source) + ": no columns");
    id_columns = {0};
  }

  ScoreTable out;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    std::string id;
    for (auto c : id_columns) {
      if (!id.empty()) id.push_back(' ');
      id += row[c];
    }
    if (!seen.insert(id).second) {
      throw FormatError(std::string(source) + ": duplicate model id '" + id + "'");
    }
    out.ids.push_back(std::move(id));
  }

  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (std::find(id_columns.begin(), id_columns.end(), c) != id_columns.end()) continue;
    std::vector<std::optional<double>> column;
    bool numeric = true;
    for (const auto& row : table.rows) {
      if (is_missing(row[c])) {
        column.emplace_back();
        continue;
      }
      auto v = parse_number(row[c]);
      if (!v) {
        numeric = false;
        break;
      }
      column.push_back(*v);
    }
    if (!numeric) continue;
    out.columns.push_back(table.header[c]);
    out.values.push_back(std::move(column));
  }
  return out;
}

ScoreTable read_score_table(const std::filesystem::path& path) {
  return to_score_table(read_csv(path), path.string());
}

}  // namespace detrank
