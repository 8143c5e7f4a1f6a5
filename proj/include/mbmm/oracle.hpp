#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mbmm/dataset.hpp"
#include "mbmm/priors.hpp"
#include "mbmm/sampler.hpp"

namespace mbmm {

struct SyntheticSpec {
  Eigen::Index n = 100;
  Eigen::VectorXd pi_true;     // length K_true, sums to 1
  Eigen::MatrixXd theta_true;  // p x K_true, entries in [0, 1]
  double missing_rate = 0.0;   // MCAR, in [0, 1)
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticData {
  BinaryDataset data;
  Eigen::VectorXi z_true;  // 0-based
};

// z_i ~ Categorical(pi_true), x_ij ~ Bernoulli(theta_true(j, z_i)), then each
// cell independently hidden with probability missing_rate.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Exact posterior over (K, z) for tiny datasets, obtained by normalizing
// exp(log_collapsed_allocation_posterior) over every allocation of every K.
struct ExactPosterior {
  Eigen::VectorXd k_total;     // p(K = k), index k - 1
  Eigen::VectorXd k_nonempty;  // p(k_nonempty = k), index k - 1
  Eigen::MatrixXd co_clustering;  // p(z_i = z_j)
  // Partition (labels by first appearance) -> probability.
  std::map<std::vector<int>, double> partitions;
  // log p(x): the collapsed weights are normalized densities, so their sum
  // is the marginal likelihood.
  double log_evidence = 0.0;
  double total_probability = 0.0;

  nlohmann::json to_json() const;
};

inline constexpr Eigen::Index kEnumerationMaxUnits = 10;
inline constexpr int kEnumerationMaxComponents = 4;

ExactPosterior brute_force_posterior(const BinaryDataset& data, const Priors& priors);

// Partition of an allocation with labels renumbered by first appearance.
std::vector<int> canonical_partition(const Eigen::Ref<const Eigen::VectorXi>& z);

// Empirical distribution of k_nonempty over retained draws, index k - 1.
Eigen::VectorXd empirical_k_nonempty(const PosteriorSamples& samples, int k_max);

double total_variation(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b);

}  // namespace mbmm
