#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mbmm/dataset.hpp"
#include "mbmm/oracle.hpp"
#include "mbmm/priors.hpp"
#include "mbmm/sampler.hpp"

namespace mbmm {

// Random fully observed n x p dataset for enumeration checks.
BinaryDataset random_tiny_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

struct EnumerationCheck {
  Eigen::VectorXd exact;      // p(k_nonempty), index k - 1
  Eigen::VectorXd empirical;  // cold-chain frequencies
  double total_variation = 0.0;
  double seconds = 0.0;
};

// Runs the sampler with parameters discarded and compares the cold chain's
// k_nonempty frequencies with the exact enumeration posterior.
EnumerationCheck enumeration_check(const BinaryDataset& data, const Priors& priors,
                                   const Mc3Config& config);

struct MomentCheck {
  std::string name;
  double empirical_mean = 0.0;
  double analytic_mean = 0.0;
  double standard_error = 0.0;  // Monte-Carlo SE of the empirical mean

  double z_score() const { return (empirical_mean - analytic_mean) / standard_error; }
};

// Dirichlet and Beta full-conditional draws against their analytic means:
// pi with all ten units in component 1 of 2 (Dirichlet(11, 1)), pi with
// three empty components (Dirichlet(1, 1, 1)), theta for a component of
// three all-ones members (Beta(4, 1)) and for an empty one (Beta(1, 1)).
std::vector<MomentCheck> conjugate_moment_checks(int draws, std::uint64_t seed);

// Three well-separated components on ten variables: component k is 0.9 on
// its own block of variables (sizes 4, 3, 3) and 0.1 elsewhere;
// pi = (0.5, 0.3, 0.2), n = 300.
SyntheticSpec recovery_benchmark_spec(std::uint64_t seed);

struct RecoveryCheck {
  int k_map = 0;
  // Largest |theta_mean - theta| over entries after matching profiles to
  // the planted components; infinite when k_map differs from K_true.
  double max_error_vs_generating = 0.0;
  // Same, against the within-cluster frequencies of the realized dataset.
  double max_error_vs_realized = 0.0;
  double adjusted_rand = 0.0;
  double swap_acceptance = 0.0;
  double seconds = 0.0;
  Eigen::MatrixXd theta_mean_matched;  // p x K_true, columns in planted order
};

RecoveryCheck synthetic_recovery(const SyntheticSpec& spec, const Priors& priors,
                                 const Mc3Config& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Oracle suite behind `mbmm verify`. The quick variant uses fewer and
// shorter runs and finishes in well under a minute.
std::vector<CheckResult> run_verification(bool quick, std::uint64_t seed, std::ostream* progress);

}  // namespace mbmm
