#pragma once

#include "mvngb/types.hpp"

// Univariate Gaussian with theta = (mu, log sigma). Used by the
// per-dimension independent baseline.
namespace mvngb::normal {

inline constexpr int kParamCount = 2;

double nll(double mu, double log_sigma, double y);
Eigen::Vector2d score(double mu, double log_sigma, double y);
// diag(1 / sigma^2, 2)
Eigen::Matrix2d fisher_information(double log_sigma);
Eigen::Vector2d natural_gradient(double mu, double log_sigma, double y);

// (mean, log of the 1/n standard deviation). Throws DataError for fewer than
// two rows or zero spread.
Eigen::Vector2d marginal_mle(ConstVecRef y);

}  // namespace mvngb::normal
