#include "mbmm/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mbmm/error.hpp"

namespace mbmm {

bool SufficientStatistics::operator==(const SufficientStatistics& other) const {
  return counts == other.counts && observed == other.observed &&
         successes == other.successes && imputed_successes == other.imputed_successes;
}

SufficientStatistics compute_statistics(const MixtureState& state, const BinaryDataset& data) {
  const Eigen::Index p = data.p();
  SufficientStatistics stats;
  stats.counts = Eigen::VectorXi::Zero(state.k);
  stats.observed = Eigen::MatrixXi::Zero(p, state.k);
  stats.successes = Eigen::MatrixXi::Zero(p, state.k);
  stats.imputed_successes = Eigen::MatrixXi::Zero(p, state.k);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int c = state.z[i];
    ++stats.counts[c];
    for (Eigen::Index j = 0; j < p; ++j) {
      if (data.observed(i, j)) {
        ++stats.observed(j, c);
        stats.successes(j, c) += state.x(i, j);
      } else {
        stats.imputed_successes(j, c) += state.x(i, j);
      }
    }
  }
  return stats;
}

void refresh_statistics(MixtureState& state, const BinaryDataset& data) {
  state.stats = compute_statistics(state, data);
}

void check_state(const MixtureState& state, const BinaryDataset& data) {
  if (state.k < 1) throw DomainError("state has no components");
  if (state.pi.size() != state.k || state.theta.cols() != state.k ||
      state.theta.rows() != data.p()) {
    throw DomainError("state parameter shapes do not match k");
  }
  if (state.z.size() != data.n() || state.x.rows() != data.n() || state.x.cols() != data.p()) {
    throw DomainError("state allocation/data shapes do not match the dataset");
  }
  if (!(state.pi.array() > 0.0).all()) throw DomainError("pi has a non-positive entry");
  if (std::abs(state.pi.sum() - 1.0) > 1e-12) throw DomainError("pi does not sum to 1");
  if (!(state.theta.array() > 0.0).all() || !(state.theta.array() < 1.0).all()) {
    throw DomainError("theta has an entry outside (0, 1)");
  }
  if ((state.z.array() < 0).any() || (state.z.array() >= state.k).any()) {
    throw DomainError("allocation outside {0..k-1}");
  }
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      if (data.observed(i, j) && state.x(i, j) != data.x(i, j)) {
        throw DomainError("observed cell was overwritten");
      }
    }
  }
  if (!(state.stats == compute_statistics(state, data))) {
    throw DomainError("sufficient statistics are out of sync with allocations");
  }
}

MixtureState make_state(const BinaryDataset& data, Eigen::VectorXi z, Eigen::VectorXd pi,
                        Eigen::MatrixXd theta, bool augment_missing) {
  MixtureState state;
  state.k = static_cast<int>(pi.size());
  state.z = std::move(z);
  state.pi = std::move(pi);
  state.theta = std::move(theta);
  state.x = data.x;
  state.augment_missing = augment_missing;
  if (state.z.size() != data.n()) throw DomainError("allocation vector length does not match n");
  if ((state.z.array() < 0).any() || (state.z.array() >= state.k).any()) {
    throw DomainError("allocation outside {0..k-1}");
  }
  refresh_statistics(state, data);
  return state;
}

MixtureState initial_state(const BinaryDataset& data, const Priors& priors, Rng& rng,
                           bool augment_missing) {
  const int k = priors.sample_k(rng);
  Eigen::VectorXi z(data.n());
  std::uniform_int_distribution<int> pick(0, k - 1);
  for (Eigen::Index i = 0; i < data.n(); ++i) z[i] = pick(rng);
  Eigen::VectorXd pi = sample_dirichlet(Eigen::VectorXd::Constant(k, priors.concentration()), rng);
  Eigen::MatrixXd theta(data.p(), k);
  for (int c = 0; c < k; ++c) {
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      theta(j, c) = std::clamp(sample_beta(priors.alpha, priors.beta, rng), kThetaFloor,
                               1.0 - kThetaFloor);
    }
  }
  MixtureState state = make_state(data, std::move(z), std::move(pi), std::move(theta),
                                  augment_missing);
  impute_missing(state, data, rng);
  return state;
}

void gibbs_update_pi(MixtureState& state, const Priors& priors, Rng& rng) {
  const Eigen::VectorXd alpha =
      state.stats.counts.cast<double>().array() + priors.concentration();
  state.pi = sample_dirichlet(alpha, rng);
}

void gibbs_update_theta(MixtureState& state, const Priors& priors, Rng& rng, double heat) {
  const auto& st = state.stats;
  for (int c = 0; c < state.k; ++c) {
    for (Eigen::Index j = 0; j < state.theta.rows(); ++j) {
      const double s = st.successes(j, c);
      const double f = st.observed(j, c) - s;
      double a = priors.alpha + heat * s;
      double b = priors.beta + heat * f;
      if (state.augment_missing) {
        const double s_imp = st.imputed_successes(j, c);
        a += s_imp;
        b += static_cast<double>(state.imputed_count(j, c)) - s_imp;
      }
      state.theta(j, c) = std::clamp(sample_beta(a, b, rng), kThetaFloor, 1.0 - kThetaFloor);
    }
  }
}

Eigen::MatrixXd allocation_log_weights(const MixtureState& state, const BinaryDataset& data,
                                       double heat) {
  // log f(x | theta_k) = sum_j w_ij [x_ij log(theta/(1-theta)) + log(1-theta)]
  // with w_ij = heat on observed cells and 1 (or 0) on imputed ones.
  const double imputed_weight = state.augment_missing ? 1.0 : 0.0;
  const Eigen::MatrixXd weight =
      data.observed.cast<double>() * (heat - imputed_weight) + imputed_weight;
  const Eigen::MatrixXd weighted_x = weight.cwiseProduct(state.x.cast<double>());
  const Eigen::MatrixXd log_odds =
      (state.theta.array().log() - (1.0 - state.theta.array()).log()).matrix();
  const Eigen::MatrixXd log_fail = (1.0 - state.theta.array()).log().matrix();

  Eigen::MatrixXd result = log_odds.transpose() * weighted_x.transpose();
  result.noalias() += log_fail.transpose() * weight.transpose();
  result.colwise() += state.pi.array().log().matrix();
  return result;
}

Eigen::VectorXd allocation_probabilities(const MixtureState& state, const BinaryDataset& data,
                                         Eigen::Index unit, double heat) {
  const Eigen::MatrixXd weights = allocation_log_weights(state, data, heat);
  return normalize_log_weights(weights.col(unit));
}

void gibbs_update_z(MixtureState& state, const BinaryDataset& data, Rng& rng, double heat) {
  const Eigen::MatrixXd weights = allocation_log_weights(state, data, heat);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    state.z[i] = sample_log_categorical(weights.col(i), rng);
  }
  refresh_statistics(state, data);
}

void impute_missing(MixtureState& state, const BinaryDataset& data, Rng& rng) {
  if (data.fully_observed()) return;
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (data.observed(i, j)) continue;
      const int c = state.z[i];
      const std::uint8_t value = uniform01(rng) < state.theta(j, c) ? 1 : 0;
      state.stats.imputed_successes(j, c) += static_cast<int>(value) - state.x(i, j);
      state.x(i, j) = value;
    }
  }
}

double log_tempered_likelihood(const MixtureState& state, const BinaryDataset& /*data*/) {
  const Eigen::ArrayXXd log_theta = state.theta.array().log();
  const Eigen::ArrayXXd log_fail = (1.0 - state.theta.array()).log();
  const auto& st = state.stats;
  double total = 0.0;
  for (int c = 0; c < state.k; ++c) {
    for (Eigen::Index j = 0; j < state.theta.rows(); ++j) {
      total += st.successes(j, c) * log_theta(j, c) +
               (st.observed(j, c) - st.successes(j, c)) * log_fail(j, c);
    }
  }
  return total;
}

}  // namespace mbmm
