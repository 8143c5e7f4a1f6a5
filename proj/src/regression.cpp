#include "mbmm/regression.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mbmm/csv.hpp"
#include "mbmm/diagnostics.hpp"
#include "mbmm/error.hpp"
#include "mbmm/random.hpp"

namespace mbmm {

namespace {

std::string list_values(const std::vector<std::string>& values, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < values.size() && i < limit; ++i) {
    if (i > 0) out += ", ";
    out += "'" + values[i] + "'";
  }
  if (values.size() > limit) out += ", ... (" + std::to_string(values.size()) + " total)";
  return out;
}

std::size_t header_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("patient table has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double softplus(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double log_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta, double prior_precision) {
  const Eigen::VectorXd eta = x * beta;
  double total = y.dot(eta);
  for (Eigen::Index i = 0; i < eta.size(); ++i) total -= softplus(eta[i]);
  return total - 0.5 * prior_precision * beta.squaredNorm();
}

}  // namespace

PatientTable parse_patients(const std::string& text, const PatientFormat& format) {
  const auto records = csv::parse(text, format.delimiter);
  if (records.size() < 2) throw ValidationError("patient table needs a header and rows");
  const auto& header = records.front().fields;
  const std::size_t id_index = header_index(header, format.unit_id_column);
  const std::size_t outcome_index = header_index(header, format.outcome_column);
  std::vector<std::size_t> covariate_index;
  for (const auto& column : format.covariate_columns) {
    covariate_index.push_back(header_index(header, column));
  }

  PatientTable table;
  table.outcome.resize(static_cast<Eigen::Index>(records.size() - 1));
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    const std::string where = "patient row " + std::to_string(r) + " (line " +
                              std::to_string(records[r].line) + ")";
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
    }
    table.unit_ids.push_back(fields[id_index]);
    const std::string& y = fields[outcome_index];
    if (y != "0" && y != "1") {
      throw ValidationError(where + ": outcome '" + y + "' is not 0 or 1");
    }
    table.outcome[static_cast<Eigen::Index>(r - 1)] = y == "1" ? 1 : 0;
    for (std::size_t c = 0; c < covariate_index.size(); ++c) {
      table.covariates[format.covariate_columns[c]].push_back(fields[covariate_index[c]]);
    }
  }
  return table;
}

PatientTable load_patients(const std::string& path, const PatientFormat& format) {
  return parse_patients(csv::slurp(path), format);
}

DesignMatrix build_design(const PatientTable& patients,
                          const std::map<std::string, int>& assignments, int profiles,
                          const std::vector<CovariateSpec>& covariates, int reference_profile) {
  if (profiles < 1) throw ValidationError("design needs at least one profile");
  if (reference_profile < 1 || reference_profile > profiles) {
    throw ValidationError("reference profile " + std::to_string(reference_profile) +
                          " outside 1.." + std::to_string(profiles));
  }
  const Eigen::Index n = patients.rows();
  std::vector<int> profile(static_cast<std::size_t>(n));
  std::vector<std::string> unresolved;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = patients.unit_ids[static_cast<std::size_t>(i)];
    const auto it = assignments.find(id);
    if (it == assignments.end()) {
      unresolved.push_back(id);
      continue;
    }
    if (it->second < 1 || it->second > profiles) {
      throw ValidationError("unit '" + id + "' has profile " + std::to_string(it->second) +
                            " outside 1.." + std::to_string(profiles));
    }
    profile[static_cast<std::size_t>(i)] = it->second;
  }
  if (!unresolved.empty()) {
    throw ValidationError("patient unit ids without a profile assignment: " +
                          list_values(unresolved));
  }

  DesignMatrix design;
  design.names.push_back("(Intercept)");
  for (int k = 1; k <= profiles; ++k) {
    if (k != reference_profile) design.names.push_back("profile_" + std::to_string(k));
  }
  std::vector<std::vector<int>> level_index;
  for (const auto& spec : covariates) {
    if (spec.levels.size() < 1) {
      throw ValidationError("covariate '" + spec.column + "' declares no levels");
    }
    const auto column = patients.covariates.find(spec.column);
    if (column == patients.covariates.end()) {
      throw ValidationError("patient table lacks covariate column '" + spec.column + "'");
    }
    std::vector<int> indices;
    std::vector<std::string> unseen;
    for (const auto& value : column->second) {
      const auto it = std::find(spec.levels.begin(), spec.levels.end(), value);
      if (it == spec.levels.end()) {
        if (std::find(unseen.begin(), unseen.end(), value) == unseen.end()) unseen.push_back(value);
        continue;
      }
      indices.push_back(static_cast<int>(it - spec.levels.begin()));
    }
    if (!unseen.empty()) {
      throw ValidationError("covariate '" + spec.column + "' has undeclared levels: " +
                            list_values(unseen));
    }
    for (std::size_t l = 1; l < spec.levels.size(); ++l) {
      design.names.push_back(spec.column + "=" + spec.levels[l]);
    }
    level_index.push_back(std::move(indices));
  }

  const auto d = static_cast<Eigen::Index>(design.names.size());
  design.x = Eigen::MatrixXd::Zero(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    design.x(i, 0) = 1.0;
    Eigen::Index column = 1;
    for (int k = 1; k <= profiles; ++k) {
      if (k == reference_profile) continue;
      if (profile[static_cast<std::size_t>(i)] == k) design.x(i, column) = 1.0;
      ++column;
    }
    for (std::size_t c = 0; c < covariates.size(); ++c) {
      const int level = level_index[c][static_cast<std::size_t>(i)];
      if (level > 0) design.x(i, column + level - 1) = 1.0;
      column += static_cast<Eigen::Index>(covariates[c].levels.size()) - 1;
    }
  }
  return design;
}

void check_full_rank(const DesignMatrix& design) {
  const Eigen::Index d = design.x.cols();
  std::vector<std::string> collinear;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::MatrixXd trial(design.x.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      trial.col(static_cast<Eigen::Index>(k)) = design.x.col(kept[k]);
    }
    trial.col(trial.cols() - 1) = design.x.col(c);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() == trial.cols()) {
      kept.push_back(c);
    } else {
      collinear.push_back(design.names[static_cast<std::size_t>(c)]);
    }
  }
  if (!collinear.empty()) {
    throw ValidationError("design matrix is rank deficient; collinear columns: " +
                          list_values(collinear));
  }
}

void LogisticConfig::validate() const {
  if (!(prior_sd > 0.0)) throw ValidationError("regression: prior_sd must be > 0");
  if (iterations < 1 || burn_in < 0 || burn_in >= iterations) {
    throw ValidationError("regression: need 0 <= burn_in < iterations");
  }
  if (thin < 1) throw ValidationError("regression: thin must be >= 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw ValidationError("regression: target_acceptance must lie in (0, 1)");
  }
  if (retained_draws() < 1) throw ValidationError("regression: configuration retains no draws");
}

CoefficientSamples fit_logistic(const DesignMatrix& design, const Eigen::VectorXi& outcome,
                                const LogisticConfig& config) {
  config.validate();
  const Eigen::MatrixXd& x = design.x;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (outcome.size() != n) throw ValidationError("outcome length does not match design rows");
  if ((outcome.array() < 0).any() || (outcome.array() > 1).any()) {
    throw ValidationError("outcome must be 0/1");
  }
  check_full_rank(design);
  const Eigen::VectorXd y = outcome.cast<double>();
  const double precision = 1.0 / (config.prior_sd * config.prior_sd);

  // Newton iterations to the posterior mode.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd hessian(d, d);
  for (int step = 0; step < 200; ++step) {
    const Eigen::VectorXd mu = (1.0 + (-(x * beta)).array().exp()).inverse().matrix();
    const Eigen::VectorXd gradient = x.transpose() * (y - mu) - precision * beta;
    const Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
    hessian = x.transpose() * w.asDiagonal() * x;
    hessian.diagonal().array() += precision;
    const Eigen::VectorXd delta = hessian.ldlt().solve(gradient);
    beta += delta;
    if (delta.norm() < 1e-10) break;
  }
  const Eigen::MatrixXd covariance = hessian.inverse();
  const Eigen::MatrixXd factor = Eigen::LLT<Eigen::MatrixXd>(covariance).matrixL();

  Rng rng = make_stream(config.seed, Stream::regression);
  std::normal_distribution<double> normal(0.0, 1.0);
  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
  double current = log_posterior(x, y, beta, precision);

  CoefficientSamples out;
  out.names = design.names;
  out.draws.resize(config.retained_draws(), d);
  long accepted_after_burn_in = 0;
  Eigen::Index row = 0;
  Eigen::VectorXd noise(d);
  for (int t = 1; t <= config.iterations; ++t) {
    for (Eigen::Index c = 0; c < d; ++c) noise[c] = normal(rng);
    const Eigen::VectorXd proposal = beta + std::exp(log_scale) * (factor * noise);
    const double candidate = log_posterior(x, y, proposal, precision);
    const double log_ratio = candidate - current;
    const bool accept = log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio;
    if (accept) {
      beta = proposal;
      current = candidate;
    }
    if (t <= config.burn_in) {
      // Robbins-Monro step on the log scale; frozen after burn-in.
      const double rate = std::min(1.0, std::exp(std::min(0.0, log_ratio)));
      log_scale += (rate - config.target_acceptance) / std::pow(static_cast<double>(t), 0.6);
      continue;
    }
    accepted_after_burn_in += accept;
    if ((t - config.burn_in) % config.thin == 0 && row < out.draws.rows()) {
      out.draws.row(row++) = beta.transpose();
    }
  }
  out.proposal_scale = std::exp(log_scale);
  out.acceptance_rate = static_cast<double>(accepted_after_burn_in) /
                        static_cast<double>(config.iterations - config.burn_in);
  out.ess.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    out.ess[c] = effective_sample_size(out.draws.col(c));
    const double mean = out.draws.col(c).mean();
    if (std::abs(mean) > 10.0 && out.ess[c] < 50.0) {
      out.warnings.push_back("possible separation: coefficient '" +
                             out.names[static_cast<std::size_t>(c)] + "' has posterior mean " +
                             std::to_string(mean) + " with ESS " + std::to_string(out.ess[c]));
    }
  }
  return out;
}

std::vector<OddsRatio> odds_ratios(const CoefficientSamples& samples, double level,
                                   PointEstimate point) {
  if (samples.draws.rows() == 0) throw DomainError("odds ratios need at least one draw");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("credible level must lie in (0, 1)");
  std::vector<OddsRatio> table;
  const double tail = 0.5 * (1.0 - level);
  for (Eigen::Index c = 0; c < samples.draws.cols(); ++c) {
    const auto column = samples.draws.col(c);
    const double center =
        point == PointEstimate::mean ? column.mean() : quantile(column, 0.5);
    table.push_back({samples.names[static_cast<std::size_t>(c)], std::exp(center),
                     std::exp(quantile(column, tail)), std::exp(quantile(column, 1.0 - tail))});
  }
  return table;
}

std::string odds_ratio_csv(const std::vector<OddsRatio>& table) {
  std::ostringstream out;
  out << "name,odds_ratio,lower,upper\n";
  for (const auto& row : table) {
    out << csv::escape(row.name, ',') << ',' << csv::format_double(row.odds_ratio) << ','
        << csv::format_double(row.lower) << ',' << csv::format_double(row.upper) << '\n';
  }
  return out.str();
}

nlohmann::json odds_ratio_json(const std::vector<OddsRatio>& table, double level) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table) {
    rows.push_back({{"name", row.name},
                    {"odds_ratio", row.odds_ratio},
                    {"lower", row.lower},
                    {"upper", row.upper}});
  }
  return {{"level", level}, {"estimates", rows}};
}

}  // namespace mbmm
