#include "mbmm/verify.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "mbmm/postprocess.hpp"
#include "mbmm/random.hpp"
#include "mbmm/state.hpp"

namespace mbmm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

MomentCheck summarize_draws(std::string name, const std::vector<double>& values,
                            double analytic_mean, double analytic_variance) {
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  return {std::move(name), mean, analytic_mean,
          std::sqrt(analytic_variance / static_cast<double>(values.size()))};
}

double beta_variance(double a, double b) {
  return a * b / ((a + b) * (a + b) * (a + b + 1.0));
}

}  // namespace

BinaryDataset random_tiny_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng = make_stream(seed, Stream::verification, 1000);
  BinaryMatrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = uniform01(rng) < 0.5 ? 1 : 0;
  }
  return BinaryDataset::from_matrix(x);
}

EnumerationCheck enumeration_check(const BinaryDataset& data, const Priors& priors,
                                   const Mc3Config& config) {
  const auto start = std::chrono::steady_clock::now();
  EnumerationCheck out;
  out.exact = brute_force_posterior(data, priors).k_nonempty;
  Mc3Config run = config;
  run.store_parameters = false;
  const PosteriorSamples samples = run_mc3(data, priors, run);
  out.empirical = empirical_k_nonempty(samples, priors.k_max);
  out.total_variation = total_variation(out.exact, out.empirical);
  out.seconds = seconds_since(start);
  return out;
}

std::vector<MomentCheck> conjugate_moment_checks(int draws, std::uint64_t seed) {
  Priors priors;
  std::vector<MomentCheck> checks;
  const auto count = static_cast<std::size_t>(draws);

  {
    Rng rng = make_stream(seed, Stream::verification, 1);
    BinaryDataset data = BinaryDataset::from_matrix(BinaryMatrix::Ones(10, 1));
    MixtureState state = make_state(data, Eigen::VectorXi::Zero(10), Eigen::Vector2d(0.5, 0.5),
                                    Eigen::MatrixXd::Constant(1, 2, 0.5));
    std::vector<double> first(count), second(count);
    for (std::size_t t = 0; t < count; ++t) {
      gibbs_update_pi(state, priors, rng);
      first[t] = state.pi[0];
      second[t] = state.pi[1];
    }
    checks.push_back(summarize_draws("pi_1 | Dirichlet(11, 1)", first, 11.0 / 12.0, beta_variance(11, 1)));
    checks.push_back(summarize_draws("pi_2 | Dirichlet(11, 1)", second, 1.0 / 12.0, beta_variance(1, 11)));
  }
  {
    Rng rng = make_stream(seed, Stream::verification, 2);
    MixtureState state;
    state.k = 3;
    state.stats.counts = Eigen::VectorXi::Zero(3);
    std::vector<std::vector<double>> values(3, std::vector<double>(count));
    for (std::size_t t = 0; t < count; ++t) {
      gibbs_update_pi(state, priors, rng);
      for (int c = 0; c < 3; ++c) values[static_cast<std::size_t>(c)][t] = state.pi[c];
    }
    for (int c = 0; c < 3; ++c) {
      checks.push_back(summarize_draws("pi_" + std::to_string(c + 1) + " | Dirichlet(1, 1, 1)",
                                       values[static_cast<std::size_t>(c)], 1.0 / 3.0,
                                       beta_variance(1, 2)));
    }
  }
  {
    Rng rng = make_stream(seed, Stream::verification, 3);
    BinaryDataset data = BinaryDataset::from_matrix(BinaryMatrix::Ones(3, 1));
    MixtureState state = make_state(data, Eigen::VectorXi::Zero(3), Eigen::Vector2d(0.5, 0.5),
                                    Eigen::MatrixXd::Constant(1, 2, 0.5));
    std::vector<double> occupied(count), empty(count);
    for (std::size_t t = 0; t < count; ++t) {
      gibbs_update_theta(state, priors, rng);
      occupied[t] = state.theta(0, 0);
      empty[t] = state.theta(0, 1);
    }
    checks.push_back(summarize_draws("theta | Beta(4, 1)", occupied, 0.8, beta_variance(4, 1)));
    checks.push_back(summarize_draws("theta | Beta(1, 1)", empty, 0.5, beta_variance(1, 1)));
  }
  return checks;
}

SyntheticSpec recovery_benchmark_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = 300;
  spec.pi_true = Eigen::Vector3d(0.5, 0.3, 0.2);
  spec.theta_true = Eigen::MatrixXd::Constant(10, 3, 0.1);
  spec.theta_true.block(0, 0, 4, 1).setConstant(0.9);
  spec.theta_true.block(4, 1, 3, 1).setConstant(0.9);
  spec.theta_true.block(7, 2, 3, 1).setConstant(0.9);
  spec.seed = seed;
  return spec;
}

RecoveryCheck synthetic_recovery(const SyntheticSpec& spec, const Priors& priors,
                                 const Mc3Config& config) {
  const auto start = std::chrono::steady_clock::now();
  const SyntheticData synthetic = generate_synthetic(spec);
  const PosteriorSamples samples = run_mc3(synthetic.data, priors, config);
  RecoveryCheck out;
  out.swap_acceptance = samples.swaps.acceptance_rate();
  out.k_map = infer_k_map(samples);
  const RelabeledSamples relabeled = ecr_relabel(samples, out.k_map);
  const ProfileSummary summary = summarize_profiles(relabeled, synthetic.data);
  out.adjusted_rand = adjusted_rand_index(summary.hard_assignment, synthetic.z_true);

  const auto k_true = static_cast<int>(spec.pi_true.size());
  out.max_error_vs_generating = std::numeric_limits<double>::infinity();
  out.max_error_vs_realized = std::numeric_limits<double>::infinity();
  if (out.k_map == k_true) {
    // profile_to_true[c] = planted component matched to profile c
    const std::vector<int> profile_to_true =
        ecr_permutation(summary.hard_assignment, synthetic.z_true, k_true);
    out.theta_mean_matched.resize(spec.theta_true.rows(), k_true);
    for (int c = 0; c < k_true; ++c) {
      out.theta_mean_matched.col(profile_to_true[static_cast<std::size_t>(c)]) =
          summary.theta_mean.col(c);
    }
    Eigen::MatrixXd realized = Eigen::MatrixXd::Zero(spec.theta_true.rows(), k_true);
    Eigen::MatrixXd observed = Eigen::MatrixXd::Zero(spec.theta_true.rows(), k_true);
    for (Eigen::Index i = 0; i < synthetic.data.n(); ++i) {
      for (Eigen::Index j = 0; j < synthetic.data.p(); ++j) {
        if (!synthetic.data.observed(i, j)) continue;
        realized(j, synthetic.z_true[i]) += synthetic.data.x(i, j);
        observed(j, synthetic.z_true[i]) += 1.0;
      }
    }
    realized = realized.cwiseQuotient(observed.cwiseMax(1.0));
    out.max_error_vs_generating = (out.theta_mean_matched - spec.theta_true).cwiseAbs().maxCoeff();
    out.max_error_vs_realized = (out.theta_mean_matched - realized).cwiseAbs().maxCoeff();
  }
  out.seconds = seconds_since(start);
  return out;
}

std::vector<CheckResult> run_verification(bool quick, std::uint64_t seed, std::ostream* progress) {
  std::vector<CheckResult> results;
  auto report = [&](CheckResult result) {
    if (progress != nullptr) {
      *progress << (result.passed ? "PASS " : "FAIL ") << result.name << ": " << result.detail
                << " (" << result.seconds << " s)" << std::endl;
    }
    results.push_back(std::move(result));
  };

  Priors tiny_priors;
  tiny_priors.k_max = 3;
  const int instances = quick ? 2 : 5;
  const int sweeps = quick ? 40000 : 200000;
  const double tv_limit = quick ? 0.05 : 0.02;
  for (int r = 0; r < instances; ++r) {
    const Eigen::Index n = 4 + r % 3;
    const Eigen::Index p = 1 + r % 2;
    const BinaryDataset data = random_tiny_dataset(n, p, seed + static_cast<std::uint64_t>(r));
    Mc3Config config;
    config.burn_in = 1000;
    config.n_iterations = config.burn_in + sweeps;
    config.thin = 1;
    config.seed = seed + 100 + static_cast<std::uint64_t>(r);
    const EnumerationCheck check = enumeration_check(data, tiny_priors, config);
    std::ostringstream detail;
    detail << "n=" << n << " p=" << p << " TV=" << check.total_variation << " (limit "
           << tv_limit << ")";
    report({"enumeration_tv_" + std::to_string(r + 1), check.total_variation <= tv_limit,
            detail.str(), check.seconds});
  }

  {
    const auto start = std::chrono::steady_clock::now();
    const auto checks = conjugate_moment_checks(quick ? 20000 : 50000, seed);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& check : checks) {
      if (std::abs(check.z_score()) > worst) {
        worst = std::abs(check.z_score());
        worst_name = check.name;
      }
    }
    std::ostringstream detail;
    detail << checks.size() << " means, worst |z|=" << worst << " (" << worst_name
           << "), limit 3";
    report({"conjugate_moments", worst <= 3.0, detail.str(), seconds_since(start)});
  }

  const int replicates = quick ? 1 : 3;
  for (int r = 0; r < replicates; ++r) {
    Mc3Config config;
    if (quick) {
      config.n_iterations = 3000;
      config.burn_in = 1000;
      config.thin = 2;
    }
    config.seed = seed + 500 + static_cast<std::uint64_t>(r);
    const RecoveryCheck check =
        synthetic_recovery(recovery_benchmark_spec(seed + 200 + static_cast<std::uint64_t>(r)),
                           Priors{}, config);
    const bool passed = check.k_map == 3 && check.adjusted_rand >= 0.95 &&
                        check.max_error_vs_realized <= 0.05;
    std::ostringstream detail;
    detail << "K_map=" << check.k_map << " ARI=" << check.adjusted_rand
           << " max|theta-realized|=" << check.max_error_vs_realized
           << " max|theta-generating|=" << check.max_error_vs_generating;
    report({"synthetic_recovery_" + std::to_string(r + 1), passed, detail.str(), check.seconds});
  }
  return results;
}

}  // namespace mbmm
