#include "entrain/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "entrain/error.hpp"

namespace entrain::io {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw InvariantError("cannot format double");
  return std::string(buffer, end);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string{};
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::optional<double> parse_optional_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  return parse_double(text);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_escape(fields[i]);
  }
  line += '\n';
  return line;
}

CsvTable CsvTable::parse(std::string_view content, char delimiter) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto finish_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    bool blank = record.size() == 1 && record.front().empty();
    if (!blank) {
      if (table.header_.empty()) {
        table.header_ = std::move(record);
      } else {
        if (record.size() != table.header_.size()) {
          throw DataError("line " + std::to_string(record_line) + ": expected " +
                          std::to_string(table.header_.size()) + " fields, found " +
                          std::to_string(record.size()));
        }
        table.rows_.push_back(std::move(record));
        table.lines_.push_back(record_line);
      }
    }
    record.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\r') {
      // tolerated before \n
    } else if (c == '\n') {
      finish_record();
      ++line;
      record_line = line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("line " + std::to_string(record_line) + ": unterminated quote");
  if (field_started || !record.empty()) finish_record();
  return table;
}

CsvTable CsvTable::read(const std::filesystem::path& path, char delimiter) {
  return parse(read_file(path), delimiter);
}

std::optional<std::size_t> CsvTable::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
  auto found = find_column(name);
  if (!found) throw DataError("missing column '" + std::string(name) + "'");
  return *found;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace entrain::io
