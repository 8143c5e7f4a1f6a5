#include "mbmm/csv.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mbmm/error.hpp"

namespace mbmm::csv {

namespace {

std::vector<std::string> split_line(std::string_view line, char delimiter,
                                    std::size_t line_number) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) {
    throw ValidationError("line " + std::to_string(line_number) +
                          ": unterminated quoted field");
  }
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace

std::vector<Record> parse(std::string_view text, char delimiter) {
  std::vector<Record> records;
  std::size_t line_number = 0;
  std::size_t start = 0;
  // Skip a UTF-8 byte order mark.
  if (text.substr(0, 3) == "\xEF\xBB\xBF") start = 3;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line = text.substr(
        start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      records.push_back({line_number, split_line(line, delimiter, line_number)});
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return records;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<Record> read_file(const std::string& path, char delimiter) {
  return parse(slurp(path), delimiter);
}

std::string escape(std::string_view field, char delimiter) {
  const bool needs_quotes =
      field.find(delimiter) != std::string_view::npos ||
      field.find('"') != std::string_view::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string join(const std::vector<std::string>& fields, char delimiter) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(delimiter);
    out += escape(fields[i], delimiter);
  }
  return out;
}

void write_atomic(const std::string& path, std::string_view content) {
  const std::string temporary = path + ".tmp";
  {
    std::ofstream out(temporary, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + temporary + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("write failed for '" + temporary + "'");
  }
  std::filesystem::rename(temporary, path);
}

}  // namespace mbmm::csv
