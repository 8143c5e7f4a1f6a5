#pragma once

#include <string>

#include <Eigen/Dense>

#include "mbmm/random.hpp"

namespace mbmm {

enum class KPriorKind { truncated_poisson, uniform };
enum class DirichletKind { unit, one_over_kmax };

// Hyperparameters of the mixture. Defaults: K ~ Poisson(1) truncated to
// {1..50}, pi | K ~ Dirichlet(1,...,1), theta ~ Beta(1, 1).
struct Priors {
  double lambda = 1.0;
  int k_max = 50;
  double gamma = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  KPriorKind k_prior_kind = KPriorKind::truncated_poisson;
  DirichletKind dirichlet_kind = DirichletKind::unit;

  void validate() const;

  // Per-component Dirichlet concentration actually used: gamma, or 1/k_max
  // for the sparse variant.
  double concentration() const {
    return dirichlet_kind == DirichletKind::one_over_kmax ? 1.0 / k_max : gamma;
  }

  // Normalized log p(K = k); -inf outside {1..k_max}.
  double log_k_prior(int k) const;

  int sample_k(Rng& rng) const;
};

const char* to_string(KPriorKind kind);
const char* to_string(DirichletKind kind);
KPriorKind k_prior_kind_from_string(const std::string& name);
DirichletKind dirichlet_kind_from_string(const std::string& name);

}  // namespace mbmm
