#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbmm/dataset.hpp"
#include "mbmm/priors.hpp"
#include "mbmm/regression.hpp"
#include "mbmm/sampler.hpp"

namespace mbmm {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  exit_ok = 0,
  exit_validation = 1,
  exit_compute = 2,
  exit_verification = 3,
};

struct RegressionSettings {
  std::string patients;
  PatientFormat format;
  std::vector<CovariateSpec> covariates;
  std::string assignments;  // defaults to <output_dir>/assignments.csv
  int reference_profile = 1;
  LogisticConfig logistic;
  double level = 0.95;
  PointEstimate point = PointEstimate::mean;
};

// Everything a subcommand needs. Loaded from a JSON file, then command line
// flags are applied on top, then validate() runs before any work starts.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "mbmm_out";

  // binarize
  std::string input_table;
  TableFormat table_format;
  std::vector<std::string> columns;  // empty keeps every column
  ThresholdRule default_rule;
  std::map<std::string, ThresholdRule> threshold_rules;

  // fit; defaults to <output_dir>/binary.csv
  std::string binary_dataset;
  Priors priors;
  Mc3Config mcmc;
  double small_profile_fraction = 0.05;

  RegressionSettings regression;

  // export-geojson
  std::string geojson_input;
  std::string geojson_key = "GEOID";
  std::string geojson_output;  // defaults to <output_dir>/profiles.geojson

  // Raw configuration document as read, before flag overrides.
  nlohmann::json source = nlohmann::json::object();

  static RunConfig from_json(const nlohmann::json& document);
  static RunConfig load(const std::string& path);

  // Resolved settings after defaults and overrides.
  nlohmann::json to_json() const;

  // Pushes the top-level seed into the sampler and regression settings.
  void propagate_seed();
  void validate() const;

  std::string binary_dataset_path() const;
  std::string assignments_path() const;
  std::string geojson_output_path() const;
};

int cmd_binarize(const RunConfig& config, std::ostream& log);
int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_regress(const RunConfig& config, std::ostream& log);
int cmd_verify(bool quick, std::uint64_t seed, std::ostream& log);
int cmd_export_geojson(const RunConfig& config, std::ostream& log);

// Draws the three-component benchmark dataset (optionally with MCAR
// missingness) and writes binary.csv and z_true.csv into output_dir.
int cmd_simulate(std::uint64_t seed, int n, double missing_rate, const std::string& output_dir,
                 std::ostream& log);

// Exact enumeration posterior of a small binary dataset, written as JSON.
int cmd_enumerate(const std::string& dataset_path, const Priors& priors,
                  const std::string& output_path, std::ostream& log);

}  // namespace mbmm
