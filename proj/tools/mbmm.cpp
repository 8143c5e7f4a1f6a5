#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mbmm/cli.hpp"
#include "mbmm/error.hpp"

namespace {

// Flags shared by the pipeline subcommands. Anything set here wins over the
// config file.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> input;
  std::optional<std::string> dataset;
  std::optional<int> chains;
  std::optional<int> iterations;
  std::optional<int> burn_in;
  std::optional<int> thin;
  std::optional<double> delta_t;
  std::optional<int> threads;
  std::optional<int> k_max;
  std::optional<std::string> patients;
  std::optional<std::string> assignments;
  std::optional<int> reference_profile;
  std::optional<std::string> point_estimate;
  std::optional<std::string> geojson;
  std::optional<std::string> key;
  std::optional<std::string> geojson_output;

  mbmm::RunConfig resolve() const {
    mbmm::RunConfig c = config.empty() ? mbmm::RunConfig{} : mbmm::RunConfig::load(config);
    if (seed) c.seed = *seed;
    if (output_dir) c.output_dir = *output_dir;
    if (input) c.input_table = *input;
    if (dataset) c.binary_dataset = *dataset;
    if (chains) c.mcmc.n_chains = *chains;
    if (iterations) c.mcmc.n_iterations = *iterations;
    if (burn_in) c.mcmc.burn_in = *burn_in;
    if (thin) c.mcmc.thin = *thin;
    if (delta_t) c.mcmc.delta_t = *delta_t;
    if (threads) c.mcmc.n_threads = *threads;
    if (k_max) c.priors.k_max = *k_max;
    if (patients) c.regression.patients = *patients;
    if (assignments) c.regression.assignments = *assignments;
    if (reference_profile) c.regression.reference_profile = *reference_profile;
    if (point_estimate) {
      if (*point_estimate == "mean") {
        c.regression.point = mbmm::PointEstimate::mean;
      } else if (*point_estimate == "median") {
        c.regression.point = mbmm::PointEstimate::median;
      } else {
        throw mbmm::ValidationError("--point-estimate must be 'mean' or 'median'");
      }
    }
    if (geojson) c.geojson_input = *geojson;
    if (key) c.geojson_key = *key;
    if (geojson_output) c.geojson_output = *geojson_output;
    c.propagate_seed();
    return c;
  }
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "top-level random seed");
  cmd->add_option("-o,--out", o.output_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian multivariate Bernoulli mixture profiling"};
  app.set_version_flag("--version", std::string(mbmm::kVersion));
  app.require_subcommand(1);

  Overrides o;
  auto* binarize = app.add_subcommand("binarize", "threshold a raw indicator table to 0/1");
  add_common(binarize, o);
  binarize->add_option("-i,--input", o.input, "raw indicator table (CSV)");
  binarize->add_option("--dataset", o.dataset, "where to write the binary table");

  auto* fit = app.add_subcommand("fit", "run the tempered sampler and summarize profiles");
  add_common(fit, o);
  fit->add_option("--dataset", o.dataset, "binary dataset (default <out>/binary.csv)");
  fit->add_option("--chains", o.chains, "number of tempered chains");
  fit->add_option("--iterations", o.iterations, "total sweeps per chain");
  fit->add_option("--burn-in", o.burn_in, "sweeps discarded before retention");
  fit->add_option("--thin", o.thin, "retain every thin-th sweep");
  fit->add_option("--delta-t", o.delta_t, "temperature increment");
  fit->add_option("--threads", o.threads, "worker threads (results do not depend on it)");
  fit->add_option("--k-max", o.k_max, "largest number of components");

  auto* regress = app.add_subcommand("regress", "logistic regression on profile membership");
  add_common(regress, o);
  regress->add_option("--patients", o.patients, "patient table (CSV)");
  regress->add_option("--assignments", o.assignments, "assignments.csv from fit");
  regress->add_option("--reference-profile", o.reference_profile, "reference profile (1-based)");
  regress->add_option("--point-estimate", o.point_estimate, "mean or median");

  bool quick = false;
  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "run the oracle suite");
  verify->add_flag("--quick", quick, "short subset");
  verify->add_option("--seed", verify_seed, "random seed");

  auto* geojson = app.add_subcommand("export-geojson", "inject profiles into a GeoJSON file");
  add_common(geojson, o);
  geojson->add_option("--geojson", o.geojson, "boundary FeatureCollection");
  geojson->add_option("--key", o.key, "feature property holding the unit id");
  geojson->add_option("--assignments", o.assignments, "assignments.csv from fit");
  geojson->add_option("--output", o.geojson_output, "output GeoJSON path");

  std::string enum_dataset, enum_output;
  int enum_k_max = 3;
  auto* enumerate = app.add_subcommand("enumerate", "exact posterior of a tiny dataset (JSON)");
  enumerate->add_option("dataset", enum_dataset, "binary dataset")->required();
  enumerate->add_option("--k-max", enum_k_max, "largest number of components");
  enumerate->add_option("--output", enum_output, "write here instead of stdout");

  std::uint64_t sim_seed = 1;
  int sim_n = 300;
  double sim_missing = 0.0;
  std::string sim_out = "synthetic";
  auto* simulate = app.add_subcommand("simulate", "draw the three-profile benchmark dataset");
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("-n", sim_n, "units");
  simulate->add_option("--missing-rate", sim_missing, "MCAR missing fraction");
  simulate->add_option("-o,--out", sim_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? mbmm::exit_ok : mbmm::exit_validation;
  }

  try {
    if (*binarize) return mbmm::cmd_binarize(o.resolve(), std::cout);
    if (*fit) return mbmm::cmd_fit(o.resolve(), std::cout);
    if (*regress) return mbmm::cmd_regress(o.resolve(), std::cout);
    if (*verify) return mbmm::cmd_verify(quick, verify_seed, std::cout);
    if (*geojson) return mbmm::cmd_export_geojson(o.resolve(), std::cout);
    if (*enumerate) {
      mbmm::Priors priors;
      priors.k_max = enum_k_max;
      return mbmm::cmd_enumerate(enum_dataset, priors, enum_output, std::cout);
    }
    if (*simulate) return mbmm::cmd_simulate(sim_seed, sim_n, sim_missing, sim_out, std::cout);
  } catch (const mbmm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mbmm::exit_validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mbmm::exit_compute;
  }
  return mbmm::exit_validation;
}
