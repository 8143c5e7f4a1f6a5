#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mbmm::csv {

struct Record {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

// Splits delimited text into records. Double-quoted fields may contain the
// delimiter and "" escapes; embedded newlines are not supported. Blank lines
// are skipped and a trailing '\r' is stripped.
std::vector<Record> parse(std::string_view text, char delimiter);

std::vector<Record> read_file(const std::string& path, char delimiter);

// Quotes a field only when it contains the delimiter, a quote or whitespace
// at either end.
std::string escape(std::string_view field, char delimiter);

// Shortest decimal representation that round-trips.
std::string format_double(double value);

std::string join(const std::vector<std::string>& fields, char delimiter);

// Reads a whole file into memory; throws ValidationError if it cannot be
// opened.
std::string slurp(const std::string& path);

// Writes via a temporary sibling file and rename, so readers never observe
// a half-written file.
void write_atomic(const std::string& path, std::string_view content);

}  // namespace mbmm::csv
