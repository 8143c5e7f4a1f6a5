#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace mbmm {

using Rng = std::mt19937_64;

// Every random stream in the library is derived from one top-level seed.
// A stream is identified by (seed, tag, index) and seeded through
// std::seed_seq, so chain m of a run always sees the same sequence no
// matter how chains are scheduled onto threads.
enum class Stream : std::uint64_t {
  chain = 1,       // index = chain slot
  swap = 2,
  regression = 3,
  synthetic = 4,
  verification = 5,  // index = check number
};

Rng make_stream(std::uint64_t seed, Stream tag, std::uint64_t index = 0);

double uniform01(Rng& rng);

// log of a Gamma(shape, 1) variate; stays finite for very small shapes
// where the variate itself underflows.
double sample_log_gamma(double shape, Rng& rng);

double sample_beta(double a, double b, Rng& rng);

// Draw from Dirichlet(alpha). Entries are floored at the smallest normal
// double so that every component keeps positive mass.
Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                 Rng& rng);

// Index drawn with probability proportional to exp(log_weights).
int sample_log_categorical(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                           Rng& rng);

// Softmax with max-shift.
Eigen::VectorXd normalize_log_weights(
    const Eigen::Ref<const Eigen::VectorXd>& log_weights);

}  // namespace mbmm
