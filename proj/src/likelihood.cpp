#include "mbmm/likelihood.hpp"

#include <cmath>
#include <string>

namespace mbmm {

double log_beta_function(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

LogDensity log_collapsed_allocation_posterior(const BinaryDataset& data,
                                              const Eigen::Ref<const Eigen::VectorXi>& z,
                                              int k, const Priors& priors) {
  if (k < 1 || k > priors.k_max) throw DomainError("k outside {1..k_max}");
  if (z.size() != data.n()) throw DomainError("allocation vector length does not match n");
  const Eigen::Index p = data.p();
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
  Eigen::MatrixXi observed = Eigen::MatrixXi::Zero(p, k);
  Eigen::MatrixXi successes = Eigen::MatrixXi::Zero(p, k);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int c = z[i];
    if (c < 0 || c >= k) throw DomainError("allocation outside {1..k}");
    ++counts[c];
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!data.observed(i, j)) continue;
      ++observed(j, c);
      successes(j, c) += data.x(i, j);
    }
  }

  const double g = priors.concentration();
  const double n = static_cast<double>(data.n());
  double total = priors.log_k_prior(k);
  total += std::lgamma(k * g) - std::lgamma(k * g + n);
  const double log_beta_prior = log_beta_function(priors.alpha, priors.beta);
  for (int c = 0; c < k; ++c) {
    total += std::lgamma(g + counts[c]) - std::lgamma(g);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double s = successes(j, c);
      const double m = observed(j, c);
      total += log_beta_function(priors.alpha + s, priors.beta + m - s) - log_beta_prior;
    }
  }
  return {total};
}

}  // namespace mbmm
