#pragma once

#include <Eigen/Dense>

namespace mbmm {

// Effective sample size of a scalar trace using Geyer's initial monotone
// positive sequence estimator of the integrated autocorrelation time.
double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& trace);

// Linear-interpolation sample quantile (R type 7), q in [0, 1].
double quantile(const Eigen::Ref<const Eigen::VectorXd>& values, double q);

}  // namespace mbmm
