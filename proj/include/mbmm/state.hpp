#pragma once

#include <Eigen/Dense>

#include "mbmm/dataset.hpp"
#include "mbmm/priors.hpp"
#include "mbmm/random.hpp"

namespace mbmm {

// Allocation sufficient statistics, all p x K except `counts`:
//   counts[k]               members of component k
//   observed(j, k)          members with x_ij observed
//   successes(j, k)         members with x_ij observed and equal to 1
//   imputed_successes(j, k) members with x_ij unobserved and imputed as 1
struct SufficientStatistics {
  Eigen::VectorXi counts;
  Eigen::MatrixXi observed;
  Eigen::MatrixXi successes;
  Eigen::MatrixXi imputed_successes;

  bool operator==(const SufficientStatistics& other) const;
};

// One chain's position: K components, allocations z (0-based), weights pi,
// p x K Bernoulli probabilities theta, and the data matrix with the current
// imputations written into unobserved cells.
struct MixtureState {
  int k = 1;
  Eigen::VectorXi z;
  Eigen::VectorXd pi;
  Eigen::MatrixXd theta;
  BinaryMatrix x;
  SufficientStatistics stats;
  // When false, imputed cells are ignored by the theta and z conditionals.
  bool augment_missing = true;

  int nonempty() const { return static_cast<int>((stats.counts.array() > 0).count()); }
  int empty() const { return k - nonempty(); }
  Eigen::Index imputed_count(Eigen::Index j, Eigen::Index c) const {
    return stats.counts[c] - stats.observed(j, c);
  }
};

inline constexpr double kThetaFloor = 1e-12;

SufficientStatistics compute_statistics(const MixtureState& state, const BinaryDataset& data);
void refresh_statistics(MixtureState& state, const BinaryDataset& data);

// Throws DomainError if any state invariant is broken: pi on the simplex
// with positive entries, theta inside (0, 1), allocations in range, and
// statistics equal to a fresh recount.
void check_state(const MixtureState& state, const BinaryDataset& data);

// State with the given parameters; imputed cells start at 0.
MixtureState make_state(const BinaryDataset& data, Eigen::VectorXi z, Eigen::VectorXd pi,
                        Eigen::MatrixXd theta, bool augment_missing = true);

// Draws K from its prior, z uniformly over {0..K-1}, pi and theta from their
// priors and imputations from theta.
MixtureState initial_state(const BinaryDataset& data, const Priors& priors, Rng& rng,
                           bool augment_missing = true);

// pi ~ Dirichlet(gamma + n_k)
void gibbs_update_pi(MixtureState& state, const Priors& priors, Rng& rng);

// theta_jk ~ Beta(alpha + h s_jk + s'_jk, beta + h (m_jk - s_jk) + (m'_jk - s'_jk))
// with observed counts (m, s) tempered by `heat` and imputed counts (m', s')
// untempered. heat = 1 gives the usual conjugate update.
void gibbs_update_theta(MixtureState& state, const Priors& priors, Rng& rng,
                        double heat = 1.0);

// Unnormalized log P(z_i = k | ...) for every unit, as a K x n matrix.
Eigen::MatrixXd allocation_log_weights(const MixtureState& state, const BinaryDataset& data,
                                       double heat = 1.0);

// Normalized allocation probabilities of one unit.
Eigen::VectorXd allocation_probabilities(const MixtureState& state, const BinaryDataset& data,
                                         Eigen::Index unit, double heat = 1.0);

// Redraws every z_i from its categorical full conditional, then recounts.
void gibbs_update_z(MixtureState& state, const BinaryDataset& data, Rng& rng,
                    double heat = 1.0);

// Redraws each unobserved cell as Bernoulli(theta_{j, z_i}).
void impute_missing(MixtureState& state, const BinaryDataset& data, Rng& rng);

// sum over observed cells of log f(x_ij | theta_{j, z_i}): the part of the
// target raised to the chain's heat.
double log_tempered_likelihood(const MixtureState& state, const BinaryDataset& data);

}  // namespace mbmm
