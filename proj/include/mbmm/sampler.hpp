#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mbmm/dataset.hpp"
#include "mbmm/priors.hpp"
#include "mbmm/random.hpp"
#include "mbmm/state.hpp"

namespace mbmm {

enum class SwapPairing { adjacent, uniform };

const char* to_string(SwapPairing pairing);
SwapPairing swap_pairing_from_string(const std::string& name);

struct Mc3Config {
  int n_iterations = 15000;
  int thin = 10;
  int burn_in = 5000;
  int n_chains = 4;
  double delta_t = 0.025;
  int swap_attempts_per_iteration = 1;
  std::uint64_t seed = 1;
  double k_move_probability = 1.0;
  double target_swap_low = 0.20;
  double target_swap_high = 0.60;
  SwapPairing pairing = SwapPairing::adjacent;
  bool impute_missing = true;
  // When false only k, k_nonempty and the log posterior are kept per draw.
  bool store_parameters = true;
  int n_threads = 1;

  void validate() const;

  // Retained iterations are burn_in + thin, burn_in + 2 thin, ... (1-based).
  bool retains(int iteration) const {
    return iteration > burn_in && (iteration - burn_in) % thin == 0;
  }
  int retained_draws() const { return (n_iterations - burn_in) / thin; }
};

// h_1 = 1 and h_m = 1 / (1 + delta_t (m - 1)).
struct HeatSchedule {
  Eigen::VectorXd heats;

  Eigen::Index size() const { return heats.size(); }
  double operator[](Eigen::Index m) const { return heats[m]; }
};

HeatSchedule heat_schedule(int chains, double delta_t);

enum class KMove { none, birth, death };

struct KMoveOutcome {
  KMove kind = KMove::none;
  bool accepted = false;
};

// Birth/death of empty components. A birth inserts an empty component at a
// uniformly chosen position with theta drawn from its Beta prior and weight
// w ~ Beta(gamma, k gamma), rescaling the others by (1 - w); a death removes a
// uniformly chosen empty component and renormalizes. With equal birth and
// death proposal rates the Metropolis-Hastings ratio for a birth from k
// (with k0 empty components) reduces to
//   p(k + 1) / p(k) * (1 - w)^n * (k + 1) / (k0 + 1).
// The moved component holds no data, so the ratio is free of the (tempered)
// likelihood.
KMoveOutcome propose_k_move(MixtureState& state, const BinaryDataset& data,
                            const Priors& priors, Rng& rng);

struct SweepCounters {
  long birth_proposals = 0;
  long birth_accepts = 0;
  long death_proposals = 0;
  long death_accepts = 0;
};

// One iteration at heat h: pi, theta, z, imputation, then a K-move with
// probability k_move_probability.
void sweep(MixtureState& state, const BinaryDataset& data, const Priors& priors, double heat,
           Rng& rng, double k_move_probability = 1.0, SweepCounters* counters = nullptr);

struct SwapTally {
  Eigen::VectorXi attempts;  // per lower chain index of the pair
  Eigen::VectorXi accepts;

  explicit SwapTally(Eigen::Index chains = 0)
      : attempts(Eigen::VectorXi::Zero(std::max<Eigen::Index>(chains - 1, 0))),
        accepts(Eigen::VectorXi::Zero(std::max<Eigen::Index>(chains - 1, 0))) {}

  long total_attempts() const { return attempts.cast<long>().sum(); }
  long total_accepts() const { return accepts.cast<long>().sum(); }
  double acceptance_rate() const {
    return total_attempts() == 0 ? 0.0
                                 : static_cast<double>(total_accepts()) / total_attempts();
  }
};

struct SwapOutcome {
  int lower = -1;  // first chain of the pair, -1 when nothing was attempted
  int upper = -1;
  double acceptance_probability = 0.0;
  bool accepted = false;
};

// Picks a pair of chains and exchanges their states with probability
//   min(1, exp[(h_a - h_b) (l_b - l_a)])
// where l is log_tempered_likelihood of each state. No-op for one chain.
SwapOutcome propose_swap(std::span<MixtureState> chains, const HeatSchedule& heats,
                         const BinaryDataset& data, Rng& rng, SwapTally& tally,
                         SwapPairing pairing = SwapPairing::adjacent);

struct Draw {
  int iteration = 0;
  int k = 0;
  int k_nonempty = 0;
  // Collapsed log p(z, K | x) up to a constant.
  double log_posterior = 0.0;
  Eigen::VectorXi z;  // 0-based; empty when parameters are not stored
  Eigen::VectorXd pi;
  Eigen::MatrixXd theta;  // p x k
};

struct ChainDiagnostics {
  double heat = 1.0;
  SweepCounters moves;
  double mean_k_nonempty = 0.0;  // over post-burn-in iterations
};

struct PosteriorSamples {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::vector<Draw> draws;  // cold chain only
  SwapTally swaps;
  std::vector<ChainDiagnostics> chains;
  // Posterior mean of P(x_ij = 1) for unobserved cells, NaN on observed
  // cells.
  Eigen::MatrixXd imputation_mean;
  std::vector<std::string> warnings;

  Eigen::VectorXi k_nonempty_trace() const;
};

PosteriorSamples run_mc3(const BinaryDataset& data, const Priors& priors,
                         const Mc3Config& config);

}  // namespace mbmm
