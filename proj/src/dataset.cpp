#include "mbmm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "mbmm/csv.hpp"
#include "mbmm/error.hpp"

namespace mbmm {

namespace {

bool parse_number(const std::string& text, double& out) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  if (begin == end) return false;
  const char* first = text.data() + begin;
  if (*first == '+') ++first;
  const auto result = std::from_chars(first, text.data() + end, out);
  return result.ec == std::errc() && result.ptr == text.data() + end && std::isfinite(out);
}

bool is_blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

Eigen::Index RawTable::column_index(const std::string& name) const {
  const auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw ValidationError("unknown column '" + name + "'");
  return it - column_names.begin();
}

RawTable RawTable::select(const std::vector<std::string>& columns) const {
  RawTable out;
  out.unit_ids = unit_ids;
  out.column_names = columns;
  out.values.resize(rows(), static_cast<Eigen::Index>(columns.size()));
  out.present.resize(rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const Eigen::Index source = column_index(columns[c]);
    out.values.col(static_cast<Eigen::Index>(c)) = values.col(source);
    out.present.col(static_cast<Eigen::Index>(c)) = present.col(source);
  }
  return out;
}

RawTable parse_table(const std::string& text, const TableFormat& format) {
  const auto records = csv::parse(text, format.delimiter);
  if (records.empty()) throw ValidationError("input table is empty");
  const auto& header = records.front().fields;
  if (header.size() < 2) {
    throw ValidationError("header must name a unit id column and at least one indicator");
  }
  if (records.size() < 2) throw ValidationError("input table has a header but no rows");

  std::size_t id_column = 0;
  if (!format.id_column.empty()) {
    const auto it = std::find(header.begin(), header.end(), format.id_column);
    if (it == header.end()) {
      throw ValidationError("id column '" + format.id_column + "' not in header");
    }
    id_column = static_cast<std::size_t>(it - header.begin());
  }

  RawTable table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != id_column) table.column_names.push_back(header[c]);
  }
  const auto n = static_cast<Eigen::Index>(records.size() - 1);
  const auto p = static_cast<Eigen::Index>(table.column_names.size());
  table.values.setConstant(n, p, std::numeric_limits<double>::quiet_NaN());
  table.present.setConstant(n, p, false);

  std::set<std::string> seen;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& record = records[static_cast<std::size_t>(i) + 1];
    const std::string where = "row " + std::to_string(i + 1) + " (line " +
                              std::to_string(record.line) + ")";
    if (record.fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(record.fields.size()));
    }
    const std::string& id = record.fields[id_column];
    if (!seen.insert(id).second) {
      throw ValidationError(where + ": duplicate unit id '" + id + "'");
    }
    table.unit_ids.push_back(id);
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == id_column) continue;
      const std::string& cell = record.fields[c];
      if (is_blank(cell) ||
          (!format.missing_sentinel.empty() && cell == format.missing_sentinel)) {
        ++j;
        continue;
      }
      double value = 0.0;
      if (!parse_number(cell, value)) {
        throw ValidationError(where + ", column '" + header[c] + "': '" + cell +
                              "' is not a number");
      }
      table.values(i, j) = value;
      table.present(i, j) = true;
      ++j;
    }
  }
  return table;
}

RawTable load_table(const std::string& path, const TableFormat& format) {
  return parse_table(csv::slurp(path), format);
}

std::string to_string(ThresholdKind kind) {
  switch (kind) {
    case ThresholdKind::median_split: return "median_split";
    case ThresholdKind::positive_split: return "positive_split";
    case ThresholdKind::fixed: return "fixed";
  }
  return "unknown";
}

ThresholdKind threshold_kind_from_string(const std::string& name) {
  if (name == "median_split" || name == "median") return ThresholdKind::median_split;
  if (name == "positive_split" || name == "positive") return ThresholdKind::positive_split;
  if (name == "fixed") return ThresholdKind::fixed;
  throw ValidationError("unknown threshold rule '" + name + "'");
}

nlohmann::json ThresholdSpec::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json entry{{"column", c.column},
                         {"rule", to_string(c.rule.kind)},
                         {"threshold", c.threshold},
                         {"direction", "above_is_one"}};
    if (c.rule.kind == ThresholdKind::fixed) entry["value"] = c.rule.value;
    out.push_back(std::move(entry));
  }
  return out;
}

double column_median(const RawTable& table, Eigen::Index column) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(table.rows()));
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    if (table.present(i, column)) values.push_back(table.values(i, column));
  }
  if (values.empty()) {
    throw ValidationError("column '" + table.column_names[static_cast<std::size_t>(column)] +
                          "' has no non-missing values");
  }
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

ThresholdSpec compute_thresholds(const RawTable& table,
                                 const std::map<std::string, ThresholdRule>& rules,
                                 ThresholdRule default_rule) {
  for (const auto& [name, rule] : rules) table.column_index(name);

  ThresholdSpec spec;
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    const std::string& name = table.column_names[static_cast<std::size_t>(j)];
    const auto it = rules.find(name);
    const ThresholdRule rule = it == rules.end() ? default_rule : it->second;
    if (!table.present.col(j).any()) {
      throw ValidationError("column '" + name + "' has no non-missing values");
    }
    double threshold = 0.0;
    switch (rule.kind) {
      case ThresholdKind::median_split: threshold = column_median(table, j); break;
      case ThresholdKind::positive_split: threshold = 0.0; break;
      case ThresholdKind::fixed:
        if (!std::isfinite(rule.value)) {
          throw ValidationError("column '" + name + "': fixed threshold must be finite");
        }
        threshold = rule.value;
        break;
    }
    spec.columns.push_back({name, rule, threshold});
  }
  return spec;
}

BinaryDataset binarize(const RawTable& table, const ThresholdSpec& spec) {
  BinaryDataset data;
  data.unit_ids = table.unit_ids;
  const auto n = table.rows();
  const auto p = static_cast<Eigen::Index>(spec.columns.size());
  if (p == 0) throw ValidationError("no columns selected for binarization");
  data.x.setZero(n, p);
  data.observed.setConstant(n, p, false);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& resolved = spec.columns[static_cast<std::size_t>(j)];
    const Eigen::Index source = table.column_index(resolved.column);
    data.column_names.push_back(resolved.column);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!table.present(i, source)) continue;
      data.observed(i, j) = true;
      data.x(i, j) = table.values(i, source) > resolved.threshold ? 1 : 0;
    }
  }
  return data;
}

void BinaryDataset::validate() const {
  if (n() < 1 || p() < 1) throw ValidationError("binary dataset must have n >= 1 and p >= 1");
  if (observed.rows() != n() || observed.cols() != p()) {
    throw ValidationError("observation mask shape does not match data");
  }
  if (static_cast<Eigen::Index>(unit_ids.size()) != n() ||
      static_cast<Eigen::Index>(column_names.size()) != p()) {
    throw ValidationError("unit ids / column names do not match data shape");
  }
  if ((x.array() > 1).any()) throw ValidationError("binary dataset holds values other than 0/1");
}

BinaryDataset BinaryDataset::from_matrix(const BinaryMatrix& x) {
  return from_matrix(x, MaskMatrix::Constant(x.rows(), x.cols(), true));
}

BinaryDataset BinaryDataset::from_matrix(const BinaryMatrix& x, const MaskMatrix& observed) {
  BinaryDataset data;
  data.x = x;
  data.observed = observed;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    data.unit_ids.push_back("u" + std::to_string(i + 1));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!observed(i, j)) data.x(i, j) = 0;
    }
  }
  for (Eigen::Index j = 0; j < x.cols(); ++j) data.column_names.push_back("v" + std::to_string(j + 1));
  return data;
}

std::string serialize_binary_dataset(const BinaryDataset& data, char delimiter) {
  std::ostringstream out;
  std::vector<std::string> header{"unit_id"};
  header.insert(header.end(), data.column_names.begin(), data.column_names.end());
  out << csv::join(header, delimiter) << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << csv::escape(data.unit_ids[static_cast<std::size_t>(i)], delimiter);
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      out << delimiter;
      if (data.observed(i, j)) {
        out << static_cast<int>(data.x(i, j));
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
  return out.str();
}

BinaryDataset parse_binary_dataset(const std::string& text, char delimiter) {
  const auto records = csv::parse(text, delimiter);
  if (records.size() < 2) throw ValidationError("binary dataset needs a header and rows");
  const auto& header = records.front().fields;
  if (header.size() < 2) throw ValidationError("binary dataset needs at least one column");
  BinaryDataset data;
  data.column_names.assign(header.begin() + 1, header.end());
  const auto n = static_cast<Eigen::Index>(records.size() - 1);
  const auto p = static_cast<Eigen::Index>(data.column_names.size());
  data.x.setZero(n, p);
  data.observed.setConstant(n, p, false);
  std::set<std::string> seen;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& record = records[static_cast<std::size_t>(i) + 1];
    const std::string where = "row " + std::to_string(i + 1) + " (line " +
                              std::to_string(record.line) + ")";
    if (record.fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(record.fields.size()));
    }
    if (!seen.insert(record.fields[0]).second) {
      throw ValidationError(where + ": duplicate unit id '" + record.fields[0] + "'");
    }
    data.unit_ids.push_back(record.fields[0]);
    for (Eigen::Index j = 0; j < p; ++j) {
      const std::string& cell = record.fields[static_cast<std::size_t>(j) + 1];
      if (cell == "1") {
        data.x(i, j) = 1;
        data.observed(i, j) = true;
      } else if (cell == "0") {
        data.observed(i, j) = true;
      } else if (cell != "NA" && !is_blank(cell)) {
        throw ValidationError(where + ": cell '" + cell + "' is not 0, 1 or NA");
      }
    }
  }
  return data;
}

BinaryDataset load_binary_dataset(const std::string& path, char delimiter) {
  return parse_binary_dataset(csv::slurp(path), delimiter);
}

}  // namespace mbmm
