#include "mbmm/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "mbmm/error.hpp"
#include "mbmm/likelihood.hpp"

namespace mbmm {

const char* to_string(SwapPairing pairing) {
  return pairing == SwapPairing::uniform ? "uniform" : "adjacent";
}

SwapPairing swap_pairing_from_string(const std::string& name) {
  if (name == "adjacent") return SwapPairing::adjacent;
  if (name == "uniform") return SwapPairing::uniform;
  throw ValidationError("unknown swap pairing '" + name + "'");
}

void Mc3Config::validate() const {
  if (n_iterations < 1) throw ValidationError("mcmc: n_iterations must be >= 1");
  if (burn_in < 0 || burn_in >= n_iterations) {
    throw ValidationError("mcmc: burn_in must satisfy 0 <= burn_in < n_iterations");
  }
  if (thin < 1) throw ValidationError("mcmc: thin must be >= 1");
  if (n_chains < 1) throw ValidationError("mcmc: n_chains must be >= 1");
  if (!(delta_t >= 0.0)) throw ValidationError("mcmc: delta_t must be >= 0");
  if (swap_attempts_per_iteration < 0) {
    throw ValidationError("mcmc: swap_attempts_per_iteration must be >= 0");
  }
  if (!(k_move_probability >= 0.0 && k_move_probability <= 1.0)) {
    throw ValidationError("mcmc: k_move_probability must lie in [0, 1]");
  }
  if (!(target_swap_low <= target_swap_high)) {
    throw ValidationError("mcmc: swap acceptance target must be an interval");
  }
  if (n_threads < 1) throw ValidationError("mcmc: n_threads must be >= 1");
  if (retained_draws() < 1) throw ValidationError("mcmc: configuration retains no draws");
}

HeatSchedule heat_schedule(int chains, double delta_t) {
  if (chains < 1) throw ValidationError("heat schedule needs at least one chain");
  if (!(delta_t >= 0.0)) throw ValidationError("heat schedule needs delta_t >= 0");
  HeatSchedule schedule;
  schedule.heats.resize(chains);
  for (int m = 0; m < chains; ++m) schedule.heats[m] = 1.0 / (1.0 + delta_t * m);
  return schedule;
}

namespace {

void insert_empty_component(MixtureState& state, int position, double weight,
                            const Eigen::VectorXd& theta_column) {
  const int k = state.k;
  const Eigen::Index p = state.theta.rows();
  auto shift_columns = [&](auto& matrix, auto fill) {
    using Matrix = std::decay_t<decltype(matrix)>;
    Matrix grown(p, k + 1);
    grown.leftCols(position) = matrix.leftCols(position);
    grown.col(position).setConstant(fill);
    grown.rightCols(k - position) = matrix.rightCols(k - position);
    matrix = std::move(grown);
  };
  shift_columns(state.theta, 0.0);
  state.theta.col(position) = theta_column;
  shift_columns(state.stats.observed, 0);
  shift_columns(state.stats.successes, 0);
  shift_columns(state.stats.imputed_successes, 0);

  Eigen::VectorXd pi(k + 1);
  pi.head(position) = (1.0 - weight) * state.pi.head(position);
  pi[position] = weight;
  pi.tail(k - position) = (1.0 - weight) * state.pi.tail(k - position);
  state.pi = pi / pi.sum();

  Eigen::VectorXi counts(k + 1);
  counts.head(position) = state.stats.counts.head(position);
  counts[position] = 0;
  counts.tail(k - position) = state.stats.counts.tail(k - position);
  state.stats.counts = std::move(counts);

  for (Eigen::Index i = 0; i < state.z.size(); ++i) {
    if (state.z[i] >= position) ++state.z[i];
  }
  state.k = k + 1;
}

void remove_component(MixtureState& state, int position) {
  const int k = state.k;
  auto drop_column = [&](auto& matrix) {
    using Matrix = std::decay_t<decltype(matrix)>;
    Matrix shrunk(matrix.rows(), k - 1);
    shrunk.leftCols(position) = matrix.leftCols(position);
    shrunk.rightCols(k - 1 - position) = matrix.rightCols(k - 1 - position);
    matrix = std::move(shrunk);
  };
  drop_column(state.theta);
  drop_column(state.stats.observed);
  drop_column(state.stats.successes);
  drop_column(state.stats.imputed_successes);

  auto drop_entry = [&](auto& vector) {
    using Vector = std::decay_t<decltype(vector)>;
    Vector shrunk(k - 1);
    shrunk.head(position) = vector.head(position);
    shrunk.tail(k - 1 - position) = vector.tail(k - 1 - position);
    vector = std::move(shrunk);
  };
  drop_entry(state.pi);
  drop_entry(state.stats.counts);
  state.pi /= state.pi.sum();

  for (Eigen::Index i = 0; i < state.z.size(); ++i) {
    if (state.z[i] > position) --state.z[i];
  }
  state.k = k - 1;
}

}  // namespace

KMoveOutcome propose_k_move(MixtureState& state, const BinaryDataset& data,
                            const Priors& priors, Rng& rng) {
  const int k = state.k;
  const double n = static_cast<double>(data.n());
  const double g = priors.concentration();
  const int empties = state.empty();
  KMoveOutcome outcome;

  if (uniform01(rng) < 0.5) {
    outcome.kind = KMove::birth;
    if (k >= priors.k_max) return outcome;
    const double w = sample_beta(g, k * g, rng);
    std::uniform_int_distribution<int> pick_position(0, k);
    const int position = pick_position(rng);
    Eigen::VectorXd theta_column(data.p());
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      theta_column[j] =
          std::clamp(sample_beta(priors.alpha, priors.beta, rng), kThetaFloor, 1.0 - kThetaFloor);
    }
    const double log_ratio = priors.log_k_prior(k + 1) - priors.log_k_prior(k) +
                             n * std::log1p(-w) + std::log(k + 1.0) - std::log(empties + 1.0);
    if (std::log(uniform01(rng)) < log_ratio) {
      insert_empty_component(state, position, w, theta_column);
      outcome.accepted = true;
    }
    return outcome;
  }

  outcome.kind = KMove::death;
  if (empties == 0 || k == 1) return outcome;
  std::uniform_int_distribution<int> pick_empty(0, empties - 1);
  int target = pick_empty(rng);
  int position = 0;
  for (int c = 0; c < k; ++c) {
    if (state.stats.counts[c] != 0) continue;
    if (target-- == 0) {
      position = c;
      break;
    }
  }
  const double w = state.pi[position];
  const double log_ratio = priors.log_k_prior(k - 1) - priors.log_k_prior(k) -
                           n * std::log1p(-w) + std::log(static_cast<double>(empties)) -
                           std::log(static_cast<double>(k));
  if (std::log(uniform01(rng)) < log_ratio) {
    remove_component(state, position);
    outcome.accepted = true;
  }
  return outcome;
}

void sweep(MixtureState& state, const BinaryDataset& data, const Priors& priors, double heat,
           Rng& rng, double k_move_probability, SweepCounters* counters) {
  gibbs_update_pi(state, priors, rng);
  gibbs_update_theta(state, priors, rng, heat);
  gibbs_update_z(state, data, rng, heat);
  impute_missing(state, data, rng);
  if (k_move_probability > 0.0 && uniform01(rng) < k_move_probability) {
    const KMoveOutcome move = propose_k_move(state, data, priors, rng);
    if (counters != nullptr) {
      if (move.kind == KMove::birth) {
        ++counters->birth_proposals;
        counters->birth_accepts += move.accepted;
      } else if (move.kind == KMove::death) {
        ++counters->death_proposals;
        counters->death_accepts += move.accepted;
      }
    }
  }
}

SwapOutcome propose_swap(std::span<MixtureState> chains, const HeatSchedule& heats,
                         const BinaryDataset& data, Rng& rng, SwapTally& tally,
                         SwapPairing pairing) {
  SwapOutcome outcome;
  const int m = static_cast<int>(chains.size());
  if (m < 2) return outcome;
  if (pairing == SwapPairing::adjacent) {
    std::uniform_int_distribution<int> pick(0, m - 2);
    outcome.lower = pick(rng);
    outcome.upper = outcome.lower + 1;
  } else {
    std::uniform_int_distribution<int> pick(0, m * (m - 1) / 2 - 1);
    int index = pick(rng);
    for (int a = 0; a < m - 1 && outcome.lower < 0; ++a) {
      const int row = m - 1 - a;
      if (index < row) {
        outcome.lower = a;
        outcome.upper = a + 1 + index;
      } else {
        index -= row;
      }
    }
  }
  const int a = outcome.lower;
  const int b = outcome.upper;
  const double log_ratio = (heats[a] - heats[b]) * (log_tempered_likelihood(chains[b], data) -
                                                    log_tempered_likelihood(chains[a], data));
  outcome.acceptance_probability = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  ++tally.attempts[a];
  if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
    std::swap(chains[a], chains[b]);
    ++tally.accepts[a];
    outcome.accepted = true;
  }
  return outcome;
}

Eigen::VectorXi PosteriorSamples::k_nonempty_trace() const {
  Eigen::VectorXi trace(static_cast<Eigen::Index>(draws.size()));
  for (std::size_t t = 0; t < draws.size(); ++t) {
    trace[static_cast<Eigen::Index>(t)] = draws[t].k_nonempty;
  }
  return trace;
}

PosteriorSamples run_mc3(const BinaryDataset& data, const Priors& priors,
                         const Mc3Config& config) {
  data.validate();
  priors.validate();
  config.validate();

  const int chain_count = config.n_chains;
  const HeatSchedule heats = heat_schedule(chain_count, config.delta_t);

  std::vector<Rng> streams;
  std::vector<MixtureState> chains;
  streams.reserve(static_cast<std::size_t>(chain_count));
  chains.reserve(static_cast<std::size_t>(chain_count));
  for (int m = 0; m < chain_count; ++m) {
    streams.push_back(make_stream(config.seed, Stream::chain, static_cast<std::uint64_t>(m)));
    chains.push_back(initial_state(data, priors, streams.back(), config.impute_missing));
  }
  Rng swap_stream = make_stream(config.seed, Stream::swap);

  PosteriorSamples samples;
  samples.n = data.n();
  samples.p = data.p();
  samples.swaps = SwapTally(chain_count);
  samples.chains.resize(static_cast<std::size_t>(chain_count));
  samples.draws.reserve(static_cast<std::size_t>(config.retained_draws()));
  for (int m = 0; m < chain_count; ++m) samples.chains[static_cast<std::size_t>(m)].heat = heats[m];

  Eigen::MatrixXd imputation_sum = Eigen::MatrixXd::Zero(data.n(), data.p());
  Eigen::VectorXd k_nonempty_sum = Eigen::VectorXd::Zero(chain_count);
  std::vector<SweepCounters> counters(static_cast<std::size_t>(chain_count));

  int iteration = 0;
  // Runs single-threaded between sweeps: swaps, then recording.
  auto between_sweeps = [&]() {
    ++iteration;
    for (int s = 0; s < config.swap_attempts_per_iteration; ++s) {
      propose_swap(chains, heats, data, swap_stream, samples.swaps, config.pairing);
    }
    if (iteration <= config.burn_in) return;
    for (int m = 0; m < chain_count; ++m) {
      k_nonempty_sum[m] += chains[static_cast<std::size_t>(m)].nonempty();
    }
    if (!config.retains(iteration)) return;
    const MixtureState& cold = chains.front();
    Draw draw;
    draw.iteration = iteration;
    draw.k = cold.k;
    draw.k_nonempty = cold.nonempty();
    draw.log_posterior = log_collapsed_allocation_posterior(data, cold.z, cold.k, priors).value;
    if (config.store_parameters) {
      draw.z = cold.z;
      draw.pi = cold.pi;
      draw.theta = cold.theta;
    }
    samples.draws.push_back(std::move(draw));
    if (!data.fully_observed()) {
      for (Eigen::Index j = 0; j < data.p(); ++j) {
        for (Eigen::Index i = 0; i < data.n(); ++i) {
          if (!data.observed(i, j)) imputation_sum(i, j) += cold.theta(j, cold.z[i]);
        }
      }
    }
  };

  auto advance = [&](int m) {
    const auto index = static_cast<std::size_t>(m);
    sweep(chains[index], data, priors, heats[m], streams[index], config.k_move_probability,
          &counters[index]);
  };

  const int threads = std::min(config.n_threads, chain_count);
  if (threads == 1) {
    for (int t = 0; t < config.n_iterations; ++t) {
      for (int m = 0; m < chain_count; ++m) advance(m);
      between_sweeps();
    }
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<bool> stop{false};
    auto on_completion = [&]() noexcept {
      if (stop.load()) return;
      try {
        between_sweeps();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop.store(true);
      }
    };
    std::barrier sync(threads, on_completion);
    auto worker = [&](int w) {
      for (int t = 0; t < config.n_iterations && !stop.load(); ++t) {
        for (int m = w; m < chain_count; m += threads) {
          try {
            advance(m);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            stop.store(true);
          }
        }
        sync.arrive_and_wait();
      }
    };
    {
      std::vector<std::jthread> pool;
      for (int w = 1; w < threads; ++w) pool.emplace_back(worker, w);
      worker(0);
    }
    if (failure) std::rethrow_exception(failure);
  }

  const double post_burn = static_cast<double>(config.n_iterations - config.burn_in);
  for (int m = 0; m < chain_count; ++m) {
    auto& diagnostics = samples.chains[static_cast<std::size_t>(m)];
    diagnostics.moves = counters[static_cast<std::size_t>(m)];
    diagnostics.mean_k_nonempty = k_nonempty_sum[m] / post_burn;
  }
  // Counters follow chain slots, not states.

  const double retained = static_cast<double>(samples.draws.size());
  samples.imputation_mean = Eigen::MatrixXd::Constant(
      data.n(), data.p(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      if (!data.observed(i, j)) samples.imputation_mean(i, j) = imputation_sum(i, j) / retained;
    }
  }

  if (chain_count > 1 && config.swap_attempts_per_iteration > 0) {
    const double rate = samples.swaps.acceptance_rate();
    if (rate < config.target_swap_low || rate > config.target_swap_high) {
      std::ostringstream message;
      message << "swap acceptance " << rate << " outside target ["
              << config.target_swap_low << ", " << config.target_swap_high
              << "]; consider retuning delta_t";
      samples.warnings.push_back(message.str());
    }
  }
  return samples;
}

}  // namespace mbmm
