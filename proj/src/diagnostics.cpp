#include "mbmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mbmm/error.hpp"

namespace mbmm {

double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& trace) {
  const Eigen::Index n = trace.size();
  if (n < 4) return static_cast<double>(n);
  const Eigen::VectorXd centered = trace.array() - trace.mean();
  const double variance = centered.squaredNorm() / static_cast<double>(n);
  if (variance <= 0.0) return static_cast<double>(n);
  auto autocorrelation = [&](Eigen::Index lag) {
    return centered.head(n - lag).dot(centered.tail(n - lag)) /
           (static_cast<double>(n) * variance);
  };
  // Sums of adjacent pairs Gamma_m = rho_{2m} + rho_{2m+1} are positive and
  // decreasing for a reversible chain; truncate at the first non-positive
  // pair and enforce monotonicity.
  double tau = -1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocorrelation(2 * m) + autocorrelation(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, previous);
    previous = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

double quantile(const Eigen::Ref<const Eigen::VectorXd>& values, double q) {
  if (values.size() == 0) throw DomainError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double position = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double fraction = position - static_cast<double>(lower);
  return sorted[lower] + fraction * (sorted[upper] - sorted[lower]);
}

}  // namespace mbmm
