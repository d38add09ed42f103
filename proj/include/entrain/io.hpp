#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace entrain::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);
double parse_double(std::string_view text);
std::optional<double> parse_optional_double(std::string_view text);

/// Quotes a field when it holds a comma, quote or newline.
std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and newlines.
class CsvTable {
 public:
  static CsvTable parse(std::string_view content, char delimiter = ',');
  static CsvTable read(const std::filesystem::path& path, char delimiter = ',');

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  /// Column position by header name; throws DataError when missing.
  std::size_t column(std::string_view name) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
  /// 1-based source line on which a row starts.
  std::size_t line_of(std::size_t row) const { return lines_.at(row); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for a single-writer bundle: truncate then write.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace entrain::io
