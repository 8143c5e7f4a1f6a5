#include "mbmm/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mbmm/error.hpp"

namespace mbmm {

void Priors::validate() const {
  if (!(lambda > 0.0)) throw ValidationError("priors: lambda must be > 0");
  if (k_max < 1) throw ValidationError("priors: k_max must be >= 1");
  if (!(gamma > 0.0)) throw ValidationError("priors: gamma must be > 0");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ValidationError("priors: alpha and beta must be > 0");
}

double Priors::log_k_prior(int k) const {
  if (k < 1 || k > k_max) return -std::numeric_limits<double>::infinity();
  if (k_prior_kind == KPriorKind::uniform) return -std::log(static_cast<double>(k_max));
  // Truncated Poisson: log(lambda^k / k!) - log sum_{m=1}^{k_max} lambda^m / m!
  auto unnormalized = [this](int m) {
    return m * std::log(lambda) - std::lgamma(m + 1.0);
  };
  double top = -std::numeric_limits<double>::infinity();
  for (int m = 1; m <= k_max; ++m) top = std::max(top, unnormalized(m));
  double sum = 0.0;
  for (int m = 1; m <= k_max; ++m) sum += std::exp(unnormalized(m) - top);
  return unnormalized(k) - top - std::log(sum);
}

int Priors::sample_k(Rng& rng) const {
  Eigen::VectorXd log_weights(k_max);
  for (int k = 1; k <= k_max; ++k) log_weights[k - 1] = log_k_prior(k);
  return sample_log_categorical(log_weights, rng) + 1;
}

const char* to_string(KPriorKind kind) {
  return kind == KPriorKind::uniform ? "uniform" : "truncated_poisson";
}

const char* to_string(DirichletKind kind) {
  return kind == DirichletKind::one_over_kmax ? "one_over_kmax" : "unit";
}

KPriorKind k_prior_kind_from_string(const std::string& name) {
  if (name == "truncated_poisson") return KPriorKind::truncated_poisson;
  if (name == "uniform") return KPriorKind::uniform;
  throw ValidationError("unknown K prior '" + name + "'");
}

DirichletKind dirichlet_kind_from_string(const std::string& name) {
  if (name == "unit") return DirichletKind::unit;
  if (name == "one_over_kmax") return DirichletKind::one_over_kmax;
  throw ValidationError("unknown Dirichlet prior '" + name + "'");
}

}  // namespace mbmm
