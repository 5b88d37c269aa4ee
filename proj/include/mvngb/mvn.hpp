#pragma once

#include <cstdint>
#include <random>

#include "mvngb/types.hpp"

// Multivariate Gaussian in the unconstrained precision-factor
// parameterization: Sigma^{-1} = L^T L with L upper triangular,
// L_ii = exp(nu_ii) + kDiagonalShift, L_ij = nu_ij for i < j.
namespace mvngb::mvn {

// Added to the exponentiated diagonal of L when it is materialized. Not part
// of theta.
inline constexpr double kDiagonalShift = 1e-6;

// M = (p^2 + 3p) / 2. Throws InvalidArgument for p < 1.
int param_count(int p);

// Inverse of param_count; throws InvalidArgument if m is not of that form.
int dim_from_param_count(Eigen::Index m);

// Position of nu_ij (0-based, i <= j) inside theta.
inline Eigen::Index nu_index(int p, int i, int j) {
  return p + static_cast<Eigen::Index>(i) * p - static_cast<Eigen::Index>(i) * (i - 1) / 2 + (j - i);
}

struct ScaleMatrix {
  Matrix factor;      // L, upper triangular
  Vector diag_exp;    // exp(nu_ii), i.e. dL_ii / dnu_ii

  int dim() const { return static_cast<int>(factor.rows()); }
  // sum_i log L_ii = -1/2 log|Sigma|
  double log_diag_sum() const;
};

struct MomentForm {
  Vector mean;
  Matrix covariance;
};

// Whitened residuals for one observation: z = mu - y, eta = L z.
struct WhitenedResiduals {
  Vector z;
  Vector eta;
};

ScaleMatrix build_scale_matrix(ConstVecRef theta);
MomentForm to_moment_form(ConstVecRef theta);
WhitenedResiduals whiten(ConstVecRef theta, const ScaleMatrix& scale, ConstVecRef y);

// Negative log density, including the (p/2) log(2 pi) constant.
double nll(ConstVecRef theta, ConstVecRef y);

// Gradient of nll with respect to theta.
Vector score(ConstVecRef theta, ConstVecRef y);

// Expected Fisher information (M x M). Independent of y.
Matrix fisher_information(ConstVecRef theta);

// Solves fisher_information(theta) * g = score(theta, y). Falls back to
// escalating diagonal jitter if the metric does not factor; throws
// NumericError when even the largest jitter fails.
Vector natural_gradient(ConstVecRef theta, ConstVecRef y);

// n x p matrix of iid draws. Deterministic in seed.
RowMatrix sample(ConstVecRef theta, Eigen::Index n, std::uint64_t seed);
// Same, drawing from a caller-owned generator.
RowMatrix sample(ConstVecRef theta, Eigen::Index n, std::mt19937_64& rng);

// Inverse of to_moment_form. Throws InvalidArgument if covariance is not SPD
// or so large that a diagonal of L would fall below kDiagonalShift.
ThetaVector fit_theta_from_moments(ConstVecRef mean, const Matrix& covariance);

// Constant-theta maximum likelihood fit (sample mean, 1/n covariance).
// Throws DataError when n <= p or the sample covariance is singular.
ThetaVector marginal_mle(ConstRowRef y);

// KL(P || Q) in closed form for P = N(theta_p), Q = N(theta_q).
double kl_divergence(ConstVecRef theta_p, ConstVecRef theta_q);

}  // namespace mvngb::mvn
