#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace detrank {

/// Header plus string cells; every row has header.size() cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC-4180 style: comma separated, double-quoted fields may contain commas,
/// quotes ("") and newlines. Blank lines are skipped.
[[nodiscard]] CsvTable parse_csv(std::string_view text, std::string_view source = "<csv>");
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

[[nodiscard]] std::string csv_field(std::string_view value);
[[nodiscard]] std::string join_csv_row(const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);
/// Fixed precision, for human-facing tables.
[[nodiscard]] std::string format_fixed(double value, int decimals);

/// Numeric view of a score CSV. The model id is `model_name`, else
/// `model` + " " + `backbone`, else `model`, else the first column. Every
/// other column whose cells all parse as numbers (or N/A / empty) becomes a
/// metric column; missing cells are nullopt.
struct ScoreTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> values;  // one vector per column

  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
  [[nodiscard]] std::optional<std::size_t> row(std::string_view id) const;
};

[[nodiscard]] ScoreTable to_score_table(const CsvTable& table, std::string_view source);
[[nodiscard]] ScoreTable read_score_table(const std::filesystem::path& path);

}  // namespace detrank
