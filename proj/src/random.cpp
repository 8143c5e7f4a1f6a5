#include "mbmm/random.hpp"

#include <cmath>
#include <limits>

namespace mbmm {

Rng make_stream(std::uint64_t seed, Stream tag, std::uint64_t index) {
  const auto tag_value = static_cast<std::uint64_t>(tag);
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag_value),
                    static_cast<std::uint32_t>(index & 0xffffffffu),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

double uniform01(Rng& rng) {
  return std::generate_canonical<double, std::numeric_limits<double>::digits>(rng);
}

double sample_log_gamma(double shape, Rng& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    return std::log(gamma(rng));
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  const double g = gamma(rng);
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  return std::log(g) + std::log(u) / shape;
}

double sample_beta(double a, double b, Rng& rng) {
  const double log_x = sample_log_gamma(a, rng);
  const double log_y = sample_log_gamma(b, rng);
  // x / (x + y) computed without forming x or y
  return 1.0 / (1.0 + std::exp(log_y - log_x));
}

Eigen::VectorXd sample_dirichlet(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                 Rng& rng) {
  Eigen::VectorXd log_g(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) log_g[k] = sample_log_gamma(alpha[k], rng);
  Eigen::VectorXd pi = normalize_log_weights(log_g);
  const double floor = std::numeric_limits<double>::min();
  if ((pi.array() < floor).any()) {
    pi = pi.cwiseMax(floor);
    pi /= pi.sum();
  }
  return pi;
}

Eigen::VectorXd normalize_log_weights(
    const Eigen::Ref<const Eigen::VectorXd>& log_weights) {
  const double top = log_weights.maxCoeff();
  Eigen::VectorXd w = (log_weights.array() - top).exp().matrix();
  return w / w.sum();
}

int sample_log_categorical(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                           Rng& rng) {
  const double top = log_weights.maxCoeff();
  const Eigen::Index k = log_weights.size();
  double total = 0.0;
  Eigen::VectorXd cumulative(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    total += std::exp(log_weights[c] - top);
    cumulative[c] = total;
  }
  const double u = uniform01(rng) * total;
  for (Eigen::Index c = 0; c < k; ++c) {
    if (u < cumulative[c]) return static_cast<int>(c);
  }
  // u == total can only happen through rounding; take the last component
  // carrying mass.
  for (Eigen::Index c = k - 1; c >= 0; --c) {
    if (std::isfinite(log_weights[c])) return static_cast<int>(c);
  }
  return static_cast<int>(k - 1);
}

}  // namespace mbmm
