#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "mbmm/dataset.hpp"
#include "mbmm/error.hpp"
#include "mbmm/priors.hpp"

namespace mbmm {

// A natural-log density value. Never NaN for valid inputs.
template <typename Scalar>
struct BasicLogDensity {
  Scalar value{};
};

using LogDensity = BasicLogDensity<double>;

namespace detail {

template <typename Derived>
void check_theta(const Eigen::MatrixBase<Derived>& theta, Eigen::Index p) {
  using Scalar = typename Derived::Scalar;
  if (theta.rows() != p) {
    throw DomainError("theta has " + std::to_string(theta.rows()) + " rows, data has " +
                      std::to_string(p) + " variables");
  }
  for (Eigen::Index k = 0; k < theta.cols(); ++k) {
    for (Eigen::Index j = 0; j < theta.rows(); ++j) {
      const Scalar t = theta(j, k);
      if (!(t > Scalar(0) && t < Scalar(1))) {
        throw DomainError("theta(" + std::to_string(j) + ", " + std::to_string(k) +
                          ") outside (0, 1)");
      }
    }
  }
}

template <typename Derived>
void check_pi(const Eigen::MatrixBase<Derived>& pi, Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  if (pi.size() != k) throw DomainError("pi length does not match theta component count");
  for (Eigen::Index c = 0; c < k; ++c) {
    using std::isfinite;
    if (!(pi[c] >= Scalar(0)) || !isfinite(pi[c])) {
      throw DomainError("pi(" + std::to_string(c) + ") is not a finite non-negative weight");
    }
  }
}

// log prod_j theta^x (1 - theta)^(1 - x) over the observed cells of unit i.
template <typename Derived>
typename Derived::Scalar log_component_density(const BinaryDataset& data, Eigen::Index i,
                                               const Eigen::MatrixBase<Derived>& theta,
                                               Eigen::Index k) {
  using std::log;
  using Scalar = typename Derived::Scalar;
  Scalar total(0);
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    if (!data.observed(i, j)) continue;
    total += data.x(i, j) ? log(theta(j, k)) : log(Scalar(1) - theta(j, k));
  }
  return total;
}

}  // namespace detail

// sum_i log sum_k pi_k prod_j theta_jk^x_ij (1 - theta_jk)^(1 - x_ij),
// unobserved cells dropped from the inner product. theta is p x K.
template <typename DerivedPi, typename DerivedTheta>
BasicLogDensity<typename DerivedTheta::Scalar> log_observed_likelihood(
    const BinaryDataset& data, const Eigen::MatrixBase<DerivedPi>& pi,
    const Eigen::MatrixBase<DerivedTheta>& theta) {
  using Scalar = typename DerivedTheta::Scalar;
  using std::exp;
  using std::log;
  detail::check_theta(theta, data.p());
  detail::check_pi(pi, theta.cols());
  const Eigen::Index k = theta.cols();
  Scalar total(0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> terms(k);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    Scalar top = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
      terms[c] = pi[c] > Scalar(0)
                     ? log(Scalar(pi[c])) + detail::log_component_density(data, i, theta, c)
                     : -std::numeric_limits<Scalar>::infinity();
      if (terms[c] > top) top = terms[c];
    }
    if (!(top > -std::numeric_limits<Scalar>::infinity())) {
      throw DomainError("mixture assigns zero density to unit " + std::to_string(i));
    }
    Scalar sum(0);
    for (Eigen::Index c = 0; c < k; ++c) sum += exp(terms[c] - top);
    total += top + log(sum);
  }
  return {total};
}

// sum_i [log pi_{z_i} + sum_j log f(x_ij | theta_{j, z_i})] over observed
// cells. z holds 0-based component indices.
template <typename DerivedPi, typename DerivedTheta>
BasicLogDensity<typename DerivedTheta::Scalar> log_complete_likelihood(
    const BinaryDataset& data, const Eigen::Ref<const Eigen::VectorXi>& z,
    const Eigen::MatrixBase<DerivedPi>& pi, const Eigen::MatrixBase<DerivedTheta>& theta) {
  using Scalar = typename DerivedTheta::Scalar;
  using std::log;
  detail::check_theta(theta, data.p());
  detail::check_pi(pi, theta.cols());
  if (z.size() != data.n()) throw DomainError("allocation vector length does not match n");
  Scalar total(0);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::Index c = z[i];
    if (c < 0 || c >= theta.cols()) {
      throw DomainError("allocation z(" + std::to_string(i) + ") is not a valid component");
    }
    if (!(pi[c] > Scalar(0))) {
      throw DomainError("unit " + std::to_string(i) + " occupies component " +
                        std::to_string(c) + " with zero weight");
    }
    total += log(Scalar(pi[c])) + detail::log_component_density(data, i, theta, c);
  }
  return {total};
}

// log p(z, K | x) up to an additive constant, with pi and theta integrated
// out under their conjugate priors:
//   log p(K) + log DirMult(z | K, gamma) + sum_{k,j} log BetaBin(s_jk, m_jk)
// where m_jk counts observed cells of variable j among members of k.
LogDensity log_collapsed_allocation_posterior(const BinaryDataset& data,
                                              const Eigen::Ref<const Eigen::VectorXi>& z,
                                              int k, const Priors& priors);

// log B(a, b)
double log_beta_function(double a, double b);

}  // namespace mbmm
