#pragma once

#include <optional>
#include <string>

#include "mvngb/types.hpp"

namespace mvngb::metrics {

struct MetricsReport {
  double nll_mean = 0.0;
  double rmse = 0.0;
  std::optional<double> kl_mean;
  double pr_alpha = 0.9;
  double pr_coverage = 0.0;
  double pr_area_mean = 0.0;
  Eigen::Index n_points = 0;
};

// Thetas are multivariate-Gaussian parameter rows, one per observation.
double mean_nll(ConstRowRef thetas, ConstRowRef y);
// sqrt(mean over rows and dimensions of (y - mu)^2).
double rmse(ConstRowRef thetas, ConstRowRef y);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
double chi2_cdf(int dof, double x);
// Inverse of chi2_cdf; throws InvalidArgument unless 0 < alpha < 1.
double chi2_quantile(int dof, double alpha);

// Whether y lies inside the alpha prediction region:
// ||L (y - mu)||^2 <= chi2_quantile(p, alpha).
bool pr_covered(ConstVecRef theta, ConstVecRef y, double alpha);
// Volume of the alpha prediction region (area for p = 2).
double pr_area(ConstVecRef theta, double alpha);

// Assembles every metric; kl_mean is filled only when truth is given.
MetricsReport evaluate(ConstRowRef thetas_pred, ConstRowRef y,
                       const std::optional<RowMatrix>& thetas_true = std::nullopt,
                       double alpha = 0.9);

// Mean and standard error (sample SD / sqrt(R)) of replicated values.
struct Summary {
  double mean = 0.0;
  double std_error = 0.0;
  int count = 0;
};
Summary summarize(ConstVecRef values);

// "90% PR" style label for a region level.
std::string pr_label(double alpha);

}  // namespace mvngb::metrics
