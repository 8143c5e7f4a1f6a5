#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace mbmm {

// Patient rows linked to units: a binary outcome and categorical covariates
// stored as raw strings, keyed by column name.
struct PatientTable {
  std::vector<std::string> unit_ids;
  Eigen::VectorXi outcome;
  std::map<std::string, std::vector<std::string>> covariates;

  Eigen::Index rows() const { return outcome.size(); }
};

struct PatientFormat {
  char delimiter = ',';
  std::string unit_id_column = "unit_id";
  std::string outcome_column = "outcome";
  std::vector<std::string> covariate_columns;
};

PatientTable load_patients(const std::string& path, const PatientFormat& format);
PatientTable parse_patients(const std::string& text, const PatientFormat& format);

// A categorical covariate; the first level is the reference.
struct CovariateSpec {
  std::string column;
  std::vector<std::string> levels;
};

struct DesignMatrix {
  Eigen::MatrixXd x;  // n_obs x d
  std::vector<std::string> names;
};

// Intercept, one dummy per non-reference profile ("profile_k", 1-based), then
// one dummy per non-reference covariate level ("column=level").
// `assignments` maps unit ids to 1-based profiles in {1..profiles}.
DesignMatrix build_design(const PatientTable& patients,
                          const std::map<std::string, int>& assignments, int profiles,
                          const std::vector<CovariateSpec>& covariates,
                          int reference_profile = 1);

// Throws ValidationError naming the columns that are linear combinations
// of earlier ones.
void check_full_rank(const DesignMatrix& design);

struct LogisticConfig {
  double prior_sd = 5.0;
  int iterations = 20000;
  int burn_in = 5000;
  int thin = 1;
  double target_acceptance = 0.234;
  std::uint64_t seed = 1;

  void validate() const;
  int retained_draws() const { return (iterations - burn_in) / thin; }
};

struct CoefficientSamples {
  std::vector<std::string> names;
  Eigen::MatrixXd draws;  // retained x d
  double acceptance_rate = 0.0;  // after burn-in
  double proposal_scale = 0.0;   // frozen at the end of burn-in
  Eigen::VectorXd ess;
  std::vector<std::string> warnings;
};

// Random-walk Metropolis on p(beta | y) with independent Normal(0, prior_sd^2)
// priors. Starts at the posterior mode; the proposal is N(0, s^2 H^-1) with H
// the negative Hessian at the mode, and s is tuned toward target_acceptance
// during burn-in and frozen afterwards.
CoefficientSamples fit_logistic(const DesignMatrix& design, const Eigen::VectorXi& outcome,
                                const LogisticConfig& config = {});

struct OddsRatio {
  std::string name;
  double odds_ratio = 1.0;
  double lower = 1.0;
  double upper = 1.0;
};

enum class PointEstimate { mean, median };

// OR = exp(point estimate of beta), interval = exp of equal-tailed quantiles.
std::vector<OddsRatio> odds_ratios(const CoefficientSamples& samples, double level = 0.95,
                                   PointEstimate point = PointEstimate::mean);

std::string odds_ratio_csv(const std::vector<OddsRatio>& table);
nlohmann::json odds_ratio_json(const std::vector<OddsRatio>& table, double level);

}  // namespace mbmm
