#include "mbmm/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "mbmm/csv.hpp"
#include "mbmm/error.hpp"
#include "mbmm/io.hpp"
#include "mbmm/oracle.hpp"
#include "mbmm/postprocess.hpp"
#include "mbmm/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mbmm {

namespace {

void check_keys(const json& object, const std::set<std::string>& allowed,
                const std::string& section) {
  if (!object.is_object()) throw ValidationError("config: '" + section + "' must be an object");
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key())) {
      throw ValidationError("config: unknown key '" + item.key() + "' in " + section);
    }
  }
}

template <typename T>
void read(const json& object, const char* key, T& out, const std::string& section) {
  if (!object.contains(key)) return;
  try {
    out = object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: " + section + "." + key + " has the wrong type");
  }
}

char read_delimiter(const json& object, const std::string& section, char fallback) {
  std::string text;
  read(object, "delimiter", text, section);
  if (text.empty()) return fallback;
  if (text == "\\t" || text == "tab") return '\t';
  if (text.size() != 1) throw ValidationError("config: " + section + ".delimiter must be one character");
  return text[0];
}

std::string delimiter_name(char delimiter) {
  return delimiter == '\t' ? std::string("\\t") : std::string(1, delimiter);
}

ThresholdRule read_rule(const json& value, const std::string& where) {
  try {
    if (value.is_string()) {
      const ThresholdKind kind = threshold_kind_from_string(value.get<std::string>());
      if (kind == ThresholdKind::fixed) {
        throw ValidationError("config: " + where + " uses 'fixed' without a value");
      }
      return {kind, 0.0};
    }
    if (value.is_number()) return ThresholdRule::fixed(value.get<double>());
    if (value.is_object()) {
      check_keys(value, {"rule", "value"}, where);
      ThresholdRule rule{threshold_kind_from_string(value.at("rule").get<std::string>()), 0.0};
      if (rule.kind == ThresholdKind::fixed) {
        if (!value.contains("value")) {
          throw ValidationError("config: " + where + " uses 'fixed' without a value");
        }
        rule.value = value.at("value").get<double>();
      }
      return rule;
    }
  } catch (const json::exception&) {
  }
  throw ValidationError("config: cannot read threshold rule at " + where);
}

json rule_json(const ThresholdRule& rule) {
  if (rule.kind == ThresholdKind::fixed) return {{"rule", "fixed"}, {"value", rule.value}};
  return to_string(rule.kind);
}

PointEstimate point_from_string(const std::string& name) {
  if (name == "mean") return PointEstimate::mean;
  if (name == "median") return PointEstimate::median;
  throw ValidationError("config: point_estimate must be 'mean' or 'median', got '" + name + "'");
}

void write_json(const std::string& path, const json& value) {
  csv::write_atomic(path, value.dump(2) + "\n");
}

std::string in_dir(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir + "': " + ec.message());
}

}  // namespace

RunConfig RunConfig::from_json(const json& document) {
  RunConfig c;
  c.source = document;
  check_keys(document,
             {"seed", "output_dir", "input", "thresholds", "binary_dataset", "priors", "mcmc",
              "postprocess", "regression", "geojson"},
             "top level");
  read(document, "seed", c.seed, "top level");
  read(document, "output_dir", c.output_dir, "top level");
  read(document, "binary_dataset", c.binary_dataset, "top level");

  if (document.contains("input")) {
    const json& in = document.at("input");
    check_keys(in, {"table", "delimiter", "id_column", "missing", "columns"}, "input");
    read(in, "table", c.input_table, "input");
    c.table_format.delimiter = read_delimiter(in, "input", ',');
    read(in, "id_column", c.table_format.id_column, "input");
    read(in, "missing", c.table_format.missing_sentinel, "input");
    read(in, "columns", c.columns, "input");
  }
  if (document.contains("thresholds")) {
    const json& t = document.at("thresholds");
    check_keys(t, {"default", "columns"}, "thresholds");
    if (t.contains("default")) c.default_rule = read_rule(t.at("default"), "thresholds.default");
    if (t.contains("columns")) {
      if (!t.at("columns").is_object()) throw ValidationError("config: thresholds.columns must be an object");
      for (const auto& item : t.at("columns").items()) {
        c.threshold_rules[item.key()] = read_rule(item.value(), "thresholds.columns." + item.key());
      }
    }
  }
  if (document.contains("priors")) {
    const json& p = document.at("priors");
    check_keys(p, {"lambda", "k_max", "gamma", "alpha", "beta", "k_prior", "dirichlet"}, "priors");
    read(p, "lambda", c.priors.lambda, "priors");
    read(p, "k_max", c.priors.k_max, "priors");
    read(p, "gamma", c.priors.gamma, "priors");
    read(p, "alpha", c.priors.alpha, "priors");
    read(p, "beta", c.priors.beta, "priors");
    std::string name;
    read(p, "k_prior", name, "priors");
    if (!name.empty()) c.priors.k_prior_kind = k_prior_kind_from_string(name);
    name.clear();
    read(p, "dirichlet", name, "priors");
    if (!name.empty()) c.priors.dirichlet_kind = dirichlet_kind_from_string(name);
  }
  if (document.contains("mcmc")) {
    const json& m = document.at("mcmc");
    check_keys(m,
               {"iterations", "burn_in", "thin", "chains", "delta_t", "swap_attempts",
                "k_move_probability", "swap_target_low", "swap_target_high", "pairing",
                "impute_missing", "store_parameters", "threads"},
               "mcmc");
    read(m, "iterations", c.mcmc.n_iterations, "mcmc");
    read(m, "burn_in", c.mcmc.burn_in, "mcmc");
    read(m, "thin", c.mcmc.thin, "mcmc");
    read(m, "chains", c.mcmc.n_chains, "mcmc");
    read(m, "delta_t", c.mcmc.delta_t, "mcmc");
    read(m, "swap_attempts", c.mcmc.swap_attempts_per_iteration, "mcmc");
    read(m, "k_move_probability", c.mcmc.k_move_probability, "mcmc");
    read(m, "swap_target_low", c.mcmc.target_swap_low, "mcmc");
    read(m, "swap_target_high", c.mcmc.target_swap_high, "mcmc");
    std::string pairing;
    read(m, "pairing", pairing, "mcmc");
    if (!pairing.empty()) c.mcmc.pairing = swap_pairing_from_string(pairing);
    read(m, "impute_missing", c.mcmc.impute_missing, "mcmc");
    read(m, "store_parameters", c.mcmc.store_parameters, "mcmc");
    read(m, "threads", c.mcmc.n_threads, "mcmc");
  }
  if (document.contains("postprocess")) {
    const json& p = document.at("postprocess");
    check_keys(p, {"small_profile_fraction"}, "postprocess");
    read(p, "small_profile_fraction", c.small_profile_fraction, "postprocess");
  }
  if (document.contains("regression")) {
    const json& r = document.at("regression");
    check_keys(r,
               {"patients", "delimiter", "unit_id_column", "outcome_column", "covariates",
                "assignments", "reference_profile", "prior_sd", "iterations", "burn_in", "thin",
                "target_acceptance", "level", "point_estimate"},
               "regression");
    RegressionSettings& s = c.regression;
    read(r, "patients", s.patients, "regression");
    s.format.delimiter = read_delimiter(r, "regression", ',');
    read(r, "unit_id_column", s.format.unit_id_column, "regression");
    read(r, "outcome_column", s.format.outcome_column, "regression");
    if (r.contains("covariates")) {
      if (!r.at("covariates").is_array()) throw ValidationError("config: regression.covariates must be an array");
      for (const json& item : r.at("covariates")) {
        check_keys(item, {"column", "levels"}, "regression.covariates[]");
        CovariateSpec spec;
        read(item, "column", spec.column, "regression.covariates[]");
        read(item, "levels", spec.levels, "regression.covariates[]");
        s.covariates.push_back(std::move(spec));
      }
    }
    read(r, "assignments", s.assignments, "regression");
    read(r, "reference_profile", s.reference_profile, "regression");
    read(r, "prior_sd", s.logistic.prior_sd, "regression");
    read(r, "iterations", s.logistic.iterations, "regression");
    read(r, "burn_in", s.logistic.burn_in, "regression");
    read(r, "thin", s.logistic.thin, "regression");
    read(r, "target_acceptance", s.logistic.target_acceptance, "regression");
    read(r, "level", s.level, "regression");
    std::string point;
    read(r, "point_estimate", point, "regression");
    if (!point.empty()) s.point = point_from_string(point);
  }
  if (document.contains("geojson")) {
    const json& g = document.at("geojson");
    check_keys(g, {"input", "key", "output"}, "geojson");
    read(g, "input", c.geojson_input, "geojson");
    read(g, "key", c.geojson_key, "geojson");
    read(g, "output", c.geojson_output, "geojson");
  }
  c.propagate_seed();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  json document;
  try {
    document = json::parse(csv::slurp(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(document);
}

void RunConfig::propagate_seed() {
  mcmc.seed = seed;
  regression.logistic.seed = seed;
}

json RunConfig::to_json() const {
  json thresholds_columns = json::object();
  for (const auto& [column, rule] : threshold_rules) thresholds_columns[column] = rule_json(rule);
  json covariates = json::array();
  for (const auto& spec : regression.covariates) {
    covariates.push_back({{"column", spec.column}, {"levels", spec.levels}});
  }
  return {
      {"seed", seed},
      {"output_dir", output_dir},
      {"input",
       {{"table", input_table},
        {"delimiter", delimiter_name(table_format.delimiter)},
        {"id_column", table_format.id_column},
        {"missing", table_format.missing_sentinel},
        {"columns", columns}}},
      {"thresholds", {{"default", rule_json(default_rule)}, {"columns", thresholds_columns}}},
      {"binary_dataset", binary_dataset_path()},
      {"priors",
       {{"lambda", priors.lambda},
        {"k_max", priors.k_max},
        {"gamma", priors.gamma},
        {"alpha", priors.alpha},
        {"beta", priors.beta},
        {"k_prior", to_string(priors.k_prior_kind)},
        {"dirichlet", to_string(priors.dirichlet_kind)}}},
      {"mcmc",
       {{"iterations", mcmc.n_iterations},
        {"burn_in", mcmc.burn_in},
        {"thin", mcmc.thin},
        {"chains", mcmc.n_chains},
        {"delta_t", mcmc.delta_t},
        {"swap_attempts", mcmc.swap_attempts_per_iteration},
        {"k_move_probability", mcmc.k_move_probability},
        {"swap_target_low", mcmc.target_swap_low},
        {"swap_target_high", mcmc.target_swap_high},
        {"pairing", to_string(mcmc.pairing)},
        {"impute_missing", mcmc.impute_missing},
        {"store_parameters", mcmc.store_parameters},
        {"threads", mcmc.n_threads}}},
      {"postprocess", {{"small_profile_fraction", small_profile_fraction}}},
      {"regression",
       {{"patients", regression.patients},
        {"delimiter", delimiter_name(regression.format.delimiter)},
        {"unit_id_column", regression.format.unit_id_column},
        {"outcome_column", regression.format.outcome_column},
        {"covariates", covariates},
        {"assignments", assignments_path()},
        {"reference_profile", regression.reference_profile},
        {"prior_sd", regression.logistic.prior_sd},
        {"iterations", regression.logistic.iterations},
        {"burn_in", regression.logistic.burn_in},
        {"thin", regression.logistic.thin},
        {"target_acceptance", regression.logistic.target_acceptance},
        {"level", regression.level},
        {"point_estimate", regression.point == PointEstimate::mean ? "mean" : "median"}}},
      {"geojson",
       {{"input", geojson_input}, {"key", geojson_key}, {"output", geojson_output_path()}}},
  };
}

void RunConfig::validate() const {
  if (output_dir.empty()) throw ValidationError("config: output_dir is empty");
  priors.validate();
  mcmc.validate();
  if (mcmc.seed != seed || regression.logistic.seed != seed) {
    throw ValidationError("config: seed was not propagated");
  }
  if (!(small_profile_fraction >= 0.0 && small_profile_fraction < 1.0)) {
    throw ValidationError("config: postprocess.small_profile_fraction must lie in [0, 1)");
  }
  regression.logistic.validate();
  if (!(regression.level > 0.0 && regression.level < 1.0)) {
    throw ValidationError("config: regression.level must lie in (0, 1)");
  }
  if (regression.reference_profile < 1) {
    throw ValidationError("config: regression.reference_profile must be >= 1");
  }
  std::set<std::string> seen;
  for (const auto& spec : regression.covariates) {
    if (spec.column.empty()) throw ValidationError("config: covariate without a column name");
    if (!seen.insert(spec.column).second) {
      throw ValidationError("config: covariate '" + spec.column + "' declared twice");
    }
    if (spec.levels.empty()) {
      throw ValidationError("config: covariate '" + spec.column + "' declares no levels");
    }
  }
}

std::string RunConfig::binary_dataset_path() const {
  return binary_dataset.empty() ? in_dir(output_dir, "binary.csv") : binary_dataset;
}

std::string RunConfig::assignments_path() const {
  return regression.assignments.empty() ? in_dir(output_dir, "assignments.csv")
                                        : regression.assignments;
}

std::string RunConfig::geojson_output_path() const {
  return geojson_output.empty() ? in_dir(output_dir, "profiles.geojson") : geojson_output;
}

int cmd_binarize(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.input_table.empty()) throw ValidationError("binarize: no input table given");
  RawTable table = load_table(config.input_table, config.table_format);
  if (!config.columns.empty()) table = table.select(config.columns);
  if (table.rows() == 0 || table.cols() == 0) {
    throw ValidationError("binarize: input table '" + config.input_table + "' is empty");
  }
  const ThresholdSpec thresholds =
      compute_thresholds(table, config.threshold_rules, config.default_rule);
  const BinaryDataset data = binarize(table, thresholds);

  ensure_dir(config.output_dir);
  const std::string binary_path = config.binary_dataset_path();
  if (fs::path(binary_path).has_parent_path()) ensure_dir(fs::path(binary_path).parent_path().string());
  csv::write_atomic(binary_path, serialize_binary_dataset(data));
  write_json(in_dir(config.output_dir, "thresholds.json"), thresholds.to_json());
  write_json(in_dir(config.output_dir, "binarize_manifest.json"),
             {{"command", "binarize"},
              {"version", kVersion},
              {"seed", config.seed},
              {"config", config.to_json()},
              {"config_source", config.source},
              {"units", data.n()},
              {"variables", data.p()},
              {"missing_cells", data.missing_count()}});
  log << "binarized " << data.n() << " units x " << data.p() << " variables ("
      << data.missing_count() << " missing cells) -> " << binary_path << "\n";
  return exit_ok;
}

int cmd_fit(const RunConfig& config, std::ostream& log) {
  config.validate();
  const BinaryDataset data = load_binary_dataset(config.binary_dataset_path());
  if (data.n() == 0) throw ValidationError("fit: dataset has no units");

  ensure_dir(config.output_dir);
  const std::string marker = in_dir(config.output_dir, "RUN_INCOMPLETE");
  const char* outputs[] = {"samples.jsonl",        "manifest.json",        "diagnostics.json",
                           "assignments.csv",      "assignments_raw.csv",  "theta_mean.csv",
                           "theta_mean_raw.csv",   "reclassification.csv", "summary.json",
                           "imputations.csv"};
  {
    std::ofstream out(marker, std::ios::trunc);
    out << "fit started; outputs in this directory are incomplete until this file is removed\n";
  }
  for (const char* name : outputs) fs::remove(in_dir(config.output_dir, name));

  const auto start = std::chrono::steady_clock::now();
  log << "fitting " << data.n() << " units x " << data.p() << " variables, "
      << config.mcmc.n_chains << " chains, " << config.mcmc.n_iterations << " iterations\n";
  const PosteriorSamples samples = run_mc3(data, config.priors, config.mcmc);
  csv::write_atomic(in_dir(config.output_dir, "samples.jsonl"), samples_to_jsonl(samples));

  const int k_map = infer_k_map(samples);
  const RelabeledSamples relabeled = ecr_relabel(samples, k_map);
  const ProfileSummary raw = summarize_profiles(relabeled, data);
  const ProfileSummary reclassified = reclassify_small(raw, config.small_profile_fraction);
  const double wall_clock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  csv::write_atomic(in_dir(config.output_dir, "assignments_raw.csv"),
                    assignments_csv(raw, data.unit_ids));
  csv::write_atomic(in_dir(config.output_dir, "theta_mean_raw.csv"),
                    theta_mean_csv(raw, data.column_names));
  csv::write_atomic(in_dir(config.output_dir, "assignments.csv"),
                    assignments_csv(reclassified, data.unit_ids));
  csv::write_atomic(in_dir(config.output_dir, "theta_mean.csv"),
                    theta_mean_csv(reclassified, data.column_names));
  csv::write_atomic(in_dir(config.output_dir, "reclassification.csv"),
                    reclassification_csv(reclassified, data.unit_ids));
  write_json(in_dir(config.output_dir, "summary.json"),
             {{"before_reclassification", summary_json(raw)},
              {"after_reclassification", summary_json(reclassified)}});
  if (!data.fully_observed()) {
    csv::write_atomic(in_dir(config.output_dir, "imputations.csv"), imputations_csv(samples, data));
  }
  write_json(in_dir(config.output_dir, "diagnostics.json"), samples_diagnostics(samples));

  json histogram = json::object();
  const Eigen::VectorXi trace = samples.k_nonempty_trace();
  for (Eigen::Index t = 0; t < trace.size(); ++t) {
    const std::string key = std::to_string(trace[t]);
    histogram[key] = histogram.value(key, 0) + 1;
  }
  write_json(in_dir(config.output_dir, "manifest.json"),
             {{"command", "fit"},
              {"version", kVersion},
              {"seed", config.seed},
              {"config", config.to_json()},
              {"config_source", config.source},
              {"dataset",
               {{"path", config.binary_dataset_path()},
                {"units", data.n()},
                {"variables", data.p()},
                {"missing_cells", data.missing_count()}}},
              {"wall_clock_seconds", wall_clock},
              {"retained_draws", samples.draws.size()},
              {"swap_acceptance", samples.swaps.acceptance_rate()},
              {"k_nonempty_histogram", histogram},
              {"k_map", k_map},
              {"draws_at_k_map", relabeled.draws.size()},
              {"profiles_after_reclassification", reclassified.profiles()},
              {"warnings", samples.warnings}});
  fs::remove(marker);

  log << "retained " << samples.draws.size() << " draws, swap acceptance "
      << samples.swaps.acceptance_rate() << ", K_map " << k_map << " ("
      << relabeled.draws.size() << " draws), " << reclassified.profiles()
      << " profiles after reclassification, " << wall_clock << " s\n";
  for (const auto& warning : samples.warnings) log << "warning: " << warning << "\n";
  return exit_ok;
}

int cmd_regress(const RunConfig& config, std::ostream& log) {
  config.validate();
  const RegressionSettings& s = config.regression;
  if (s.patients.empty()) throw ValidationError("regress: no patient table given");
  PatientFormat format = s.format;
  format.covariate_columns.clear();
  for (const auto& spec : s.covariates) format.covariate_columns.push_back(spec.column);
  const PatientTable patients = load_patients(s.patients, format);
  int profiles = 0;
  const auto assignments = read_assignments(config.assignments_path(), &profiles);
  const DesignMatrix design =
      build_design(patients, assignments, profiles, s.covariates, s.reference_profile);
  check_full_rank(design);

  const CoefficientSamples samples = fit_logistic(design, patients.outcome, s.logistic);
  const auto table = odds_ratios(samples, s.level, s.point);

  ensure_dir(config.output_dir);
  csv::write_atomic(in_dir(config.output_dir, "odds_ratios.csv"), odds_ratio_csv(table));
  write_json(in_dir(config.output_dir, "forest.json"), odds_ratio_json(table, s.level));
  json ess = json::object();
  for (std::size_t c = 0; c < samples.names.size(); ++c) {
    ess[samples.names[c]] = samples.ess[static_cast<Eigen::Index>(c)];
  }
  write_json(in_dir(config.output_dir, "regression_manifest.json"),
             {{"command", "regress"},
              {"version", kVersion},
              {"seed", config.seed},
              {"config", config.to_json()},
              {"config_source", config.source},
              {"patients", patients.rows()},
              {"profiles", profiles},
              {"retained_draws", samples.draws.rows()},
              {"acceptance_rate", samples.acceptance_rate},
              {"proposal_scale", samples.proposal_scale},
              {"ess", ess},
              {"warnings", samples.warnings}});
  log << "fitted " << design.names.size() << " coefficients on " << patients.rows()
      << " patients, acceptance " << samples.acceptance_rate << "\n";
  for (const auto& row : table) {
    log << "  " << row.name << "  OR " << row.odds_ratio << " (" << row.lower << ", "
        << row.upper << ")\n";
  }
  for (const auto& warning : samples.warnings) log << "warning: " << warning << "\n";
  return exit_ok;
}

int cmd_verify(bool quick, std::uint64_t seed, std::ostream& log) {
  const auto results = run_verification(quick, seed, &log);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  log << (failed == 0 ? "all " : "") << results.size() - static_cast<std::size_t>(failed) << "/"
      << results.size() << " checks passed\n";
  return failed == 0 ? exit_ok : exit_verification;
}

int cmd_export_geojson(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (config.geojson_input.empty()) throw ValidationError("export-geojson: no GeoJSON input given");
  json collection;
  try {
    collection = json::parse(csv::slurp(config.geojson_input));
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + config.geojson_input + "' is not valid JSON: " + e.what());
  }
  const json joined = join_geojson_from_csv(collection, csv::slurp(config.assignments_path()),
                                            config.geojson_key);
  const std::string output = config.geojson_output_path();
  if (fs::path(output).has_parent_path()) ensure_dir(fs::path(output).parent_path().string());
  csv::write_atomic(output, joined.dump() + "\n");
  std::size_t matched = 0;
  for (const json& feature : joined.at("features")) {
    matched += feature.at("properties").at("mbmm_profile").is_null() ? 0 : 1;
  }
  log << "joined " << matched << "/" << joined.at("features").size() << " features -> " << output
      << "\n";
  return exit_ok;
}

int cmd_simulate(std::uint64_t seed, int n, double missing_rate, const std::string& output_dir,
                 std::ostream& log) {
  SyntheticSpec spec = recovery_benchmark_spec(seed);
  spec.n = n;
  spec.missing_rate = missing_rate;
  spec.validate();
  const SyntheticData synthetic = generate_synthetic(spec);
  ensure_dir(output_dir);
  csv::write_atomic(in_dir(output_dir, "binary.csv"), serialize_binary_dataset(synthetic.data));
  std::string truth = "unit_id,component\n";
  for (Eigen::Index i = 0; i < synthetic.data.n(); ++i) {
    truth += synthetic.data.unit_ids[static_cast<std::size_t>(i)] + "," +
             std::to_string(synthetic.z_true[i] + 1) + "\n";
  }
  csv::write_atomic(in_dir(output_dir, "z_true.csv"), truth);
  log << "simulated " << synthetic.data.n() << " units x " << synthetic.data.p()
      << " variables -> " << output_dir << "\n";
  return exit_ok;
}

int cmd_enumerate(const std::string& dataset_path, const Priors& priors,
                  const std::string& output_path, std::ostream& log) {
  priors.validate();
  const BinaryDataset data = load_binary_dataset(dataset_path);
  const ExactPosterior exact = brute_force_posterior(data, priors);
  const std::string text = exact.to_json().dump(2) + "\n";
  if (output_path.empty()) {
    log << text;
  } else {
    csv::write_atomic(output_path, text);
    log << "wrote exact posterior -> " << output_path << "\n";
  }
  return exit_ok;
}

}  // namespace mbmm
