#include "mvngb/normal.hpp"

#include <cmath>

#include "mvngb/error.hpp"

namespace mvngb::normal {
namespace {
constexpr double kHalfLogTwoPi = 0.91893853320467274178;
}

double nll(double mu, double log_sigma, double y) {
  const double r = (y - mu) * std::exp(-log_sigma);
  return kHalfLogTwoPi + log_sigma + 0.5 * r * r;
}

Eigen::Vector2d score(double mu, double log_sigma, double y) {
  const double inv_var = std::exp(-2.0 * log_sigma);
  const double diff = mu - y;
  return {diff * inv_var, 1.0 - diff * diff * inv_var};
}

Eigen::Matrix2d fisher_information(double log_sigma) {
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
  info(0, 0) = std::exp(-2.0 * log_sigma);
  info(1, 1) = 2.0;
  return info;
}

Eigen::Vector2d natural_gradient(double mu, double log_sigma, double y) {
  // Diagonal metric: divide each score entry by its Fisher entry.
  const double diff = mu - y;
  return {diff, 0.5 * (1.0 - diff * diff * std::exp(-2.0 * log_sigma))};
}

Eigen::Vector2d marginal_mle(ConstVecRef y) {
  if (y.size() < 2) {
    throw DataError("univariate marginal fit needs at least two rows");
  }
  if (!y.allFinite()) {
    throw DataError("targets contain non-finite values");
  }
  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  if (!(var > 0.0)) {
    throw DataError("target column has zero variance");
  }
  return {mean, 0.5 * std::log(var)};
}

}  // namespace mvngb::normal
