#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace mbmm {

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Raw indicator table: one row per unit, one numeric column per indicator.
// Missing cells carry NaN in `values` and false in `present`.
struct RawTable {
  std::vector<std::string> unit_ids;
  std::vector<std::string> column_names;
  Eigen::MatrixXd values;
  MaskMatrix present;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  Eigen::Index column_index(const std::string& name) const;

  // Keeps the named columns, in the given order.
  RawTable select(const std::vector<std::string>& columns) const;
};

struct TableFormat {
  char delimiter = ',';
  // Column holding the unit identifier; empty means the first column.
  std::string id_column;
  // Cell content treated as missing, in addition to the empty field.
  std::string missing_sentinel;
};

RawTable load_table(const std::string& path, const TableFormat& format = {});
RawTable parse_table(const std::string& text, const TableFormat& format = {});

enum class ThresholdKind { median_split, positive_split, fixed };

struct ThresholdRule {
  ThresholdKind kind = ThresholdKind::median_split;
  double value = 0.0;  // used by ThresholdKind::fixed only

  static ThresholdRule median() { return {}; }
  static ThresholdRule positive() { return {ThresholdKind::positive_split, 0.0}; }
  static ThresholdRule fixed(double v) { return {ThresholdKind::fixed, v}; }
};

struct ResolvedThreshold {
  std::string column;
  ThresholdRule rule;
  double threshold = 0.0;
};

// One resolved rule per column, in table column order. A value maps to 1
// iff it is strictly above its threshold.
struct ThresholdSpec {
  std::vector<ResolvedThreshold> columns;

  nlohmann::json to_json() const;
};

std::string to_string(ThresholdKind kind);
ThresholdKind threshold_kind_from_string(const std::string& name);

// Sample median of the present values: the middle order statistic, or the
// mean of the two central ones for an even count.
double column_median(const RawTable& table, Eigen::Index column);

// Columns absent from `rules` get `default_rule`.
ThresholdSpec compute_thresholds(const RawTable& table,
                                 const std::map<std::string, ThresholdRule>& rules = {},
                                 ThresholdRule default_rule = {});

// The model's X: n x p in {0,1} plus an observation mask. Unobserved
// entries of `x` are stored as 0 and never read by the likelihood.
struct BinaryDataset {
  BinaryMatrix x;
  MaskMatrix observed;
  std::vector<std::string> unit_ids;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index missing_count() const { return (!observed).count(); }
  bool fully_observed() const { return observed.all(); }

  // Throws ValidationError on shape mismatches or entries other than 0/1.
  void validate() const;

  // Builds a dataset from a dense 0/1 matrix, every cell observed, with
  // generated unit ids and column names.
  static BinaryDataset from_matrix(const BinaryMatrix& x);
  static BinaryDataset from_matrix(const BinaryMatrix& x, const MaskMatrix& observed);
};

BinaryDataset binarize(const RawTable& table, const ThresholdSpec& spec);

// Delimited text: header "unit_id,<columns>", one row per unit, cells 0, 1
// or NA.
std::string serialize_binary_dataset(const BinaryDataset& data, char delimiter = ',');
BinaryDataset parse_binary_dataset(const std::string& text, char delimiter = ',');
BinaryDataset load_binary_dataset(const std::string& path, char delimiter = ',');

}  // namespace mbmm
