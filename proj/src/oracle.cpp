#include "mbmm/oracle.hpp"

#include <cmath>
#include <string>

#include "mbmm/error.hpp"
#include "mbmm/likelihood.hpp"
#include "mbmm/random.hpp"

namespace mbmm {

void SyntheticSpec::validate() const {
  if (n < 1) throw ValidationError("synthetic: n must be >= 1");
  if (pi_true.size() < 1 || theta_true.cols() != pi_true.size() || theta_true.rows() < 1) {
    throw ValidationError("synthetic: pi_true and theta_true shapes disagree");
  }
  if ((pi_true.array() < 0.0).any() || std::abs(pi_true.sum() - 1.0) > 1e-9) {
    throw ValidationError("synthetic: pi_true must be a probability vector");
  }
  if ((theta_true.array() < 0.0).any() || (theta_true.array() > 1.0).any()) {
    throw ValidationError("synthetic: theta_true entries must lie in [0, 1]");
  }
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    throw ValidationError("synthetic: missing_rate must lie in [0, 1)");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, Stream::synthetic);
  const Eigen::Index p = spec.theta_true.rows();
  const Eigen::VectorXd log_pi = spec.pi_true.array().log().matrix();
  SyntheticData out;
  out.z_true.resize(spec.n);
  BinaryMatrix x(spec.n, p);
  MaskMatrix observed = MaskMatrix::Constant(spec.n, p, true);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    const int c = sample_log_categorical(log_pi, rng);
    out.z_true[i] = c;
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = uniform01(rng) < spec.theta_true(j, c) ? 1 : 0;
  }
  if (spec.missing_rate > 0.0) {
    for (Eigen::Index i = 0; i < spec.n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) observed(i, j) = !(uniform01(rng) < spec.missing_rate);
    }
  }
  out.data = BinaryDataset::from_matrix(x, observed);
  return out;
}

std::vector<int> canonical_partition(const Eigen::Ref<const Eigen::VectorXi>& z) {
  std::vector<int> relabel(static_cast<std::size_t>(z.maxCoeff() + 1), -1);
  std::vector<int> out(static_cast<std::size_t>(z.size()));
  int next = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    int& label = relabel[static_cast<std::size_t>(z[i])];
    if (label < 0) label = next++;
    out[static_cast<std::size_t>(i)] = label;
  }
  return out;
}

ExactPosterior brute_force_posterior(const BinaryDataset& data, const Priors& priors) {
  data.validate();
  priors.validate();
  if (data.n() > kEnumerationMaxUnits || priors.k_max > kEnumerationMaxComponents) {
    throw ValidationError("enumeration limited to n <= " + std::to_string(kEnumerationMaxUnits) +
                          " and k_max <= " + std::to_string(kEnumerationMaxComponents) +
                          " (sum_K K^n allocations); got n = " + std::to_string(data.n()) +
                          ", k_max = " + std::to_string(priors.k_max));
  }
  const Eigen::Index n = data.n();

  struct State {
    int k;
    Eigen::VectorXi z;
    double log_weight;
  };
  std::vector<State> states;
  double top = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= priors.k_max; ++k) {
    Eigen::VectorXi z = Eigen::VectorXi::Zero(n);
    while (true) {
      const double w = log_collapsed_allocation_posterior(data, z, k, priors).value;
      top = std::max(top, w);
      states.push_back({k, z, w});
      Eigen::Index position = 0;
      while (position < n && ++z[position] == k) z[position++] = 0;
      if (position == n) break;
    }
  }

  double sum = 0.0;
  for (const auto& s : states) sum += std::exp(s.log_weight - top);

  ExactPosterior out;
  out.log_evidence = top + std::log(sum);
  out.k_total = Eigen::VectorXd::Zero(priors.k_max);
  out.k_nonempty = Eigen::VectorXd::Zero(priors.k_max);
  out.co_clustering = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : states) {
    const double probability = std::exp(s.log_weight - out.log_evidence);
    out.total_probability += probability;
    out.k_total[s.k - 1] += probability;
    std::vector<int> partition = canonical_partition(s.z);
    const int occupied = *std::max_element(partition.begin(), partition.end()) + 1;
    out.k_nonempty[occupied - 1] += probability;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (s.z[i] == s.z[j]) out.co_clustering(i, j) += probability;
      }
    }
    out.partitions[std::move(partition)] += probability;
  }
  return out;
}

nlohmann::json ExactPosterior::to_json() const {
  nlohmann::json out;
  out["log_evidence"] = log_evidence;
  out["total_probability"] = total_probability;
  out["k_total"] = std::vector<double>(k_total.data(), k_total.data() + k_total.size());
  out["k_nonempty"] =
      std::vector<double>(k_nonempty.data(), k_nonempty.data() + k_nonempty.size());
  nlohmann::json co = nlohmann::json::array();
  for (Eigen::Index i = 0; i < co_clustering.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(co_clustering.cols()));
    for (Eigen::Index j = 0; j < co_clustering.cols(); ++j) row[static_cast<std::size_t>(j)] = co_clustering(i, j);
    co.push_back(row);
  }
  out["co_clustering"] = co;
  nlohmann::json partitions_json = nlohmann::json::array();
  for (const auto& [partition, probability] : partitions) {
    std::vector<int> one_based = partition;
    for (int& label : one_based) ++label;
    partitions_json.push_back({{"partition", one_based}, {"probability", probability}});
  }
  out["partitions"] = partitions_json;
  return out;
}

Eigen::VectorXd empirical_k_nonempty(const PosteriorSamples& samples, int k_max) {
  Eigen::VectorXd distribution = Eigen::VectorXd::Zero(k_max);
  for (const Draw& draw : samples.draws) distribution[draw.k_nonempty - 1] += 1.0;
  if (!samples.draws.empty()) distribution /= static_cast<double>(samples.draws.size());
  return distribution;
}

double total_variation(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw DomainError("distributions have different supports");
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace mbmm
