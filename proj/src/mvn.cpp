#include "mvngb/mvn.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "mvngb/error.hpp"

namespace mvngb::mvn {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2 pi)

// Jitter schedule for the Fisher solve, relative to trace / M.
constexpr double kFirstJitter = 1e-9;
constexpr double kMaxJitter = 1e-3;

// A sample covariance whose conditional variances fall below this fraction of
// the marginal ones is treated as singular.
constexpr double kSingularPivotRatio = 1e-10;

int checked_dim(ConstVecRef theta) {
  const int p = dim_from_param_count(theta.size());
  if (!theta.allFinite()) {
    throw InvalidParameter("theta contains non-finite entries");
  }
  return p;
}

void check_target(int p, ConstVecRef y) {
  if (y.size() != p) {
    std::ostringstream msg;
    msg << "target has length " << y.size() << ", expected " << p;
    throw InvalidArgument(msg.str());
  }
}

// Sigma = L^{-1} L^{-T} by triangular solves.
Matrix covariance_from_factor(const Matrix& factor) {
  const auto p = factor.rows();
  Matrix inv = factor.triangularView<Eigen::Upper>().solve(Matrix::Identity(p, p));
  Matrix cov = inv * inv.transpose();
  return 0.5 * (cov + cov.transpose());
}

}  // namespace

int param_count(int p) {
  if (p < 1) {
    throw InvalidArgument("target dimension must be at least 1");
  }
  return (p * p + 3 * p) / 2;
}

int dim_from_param_count(Eigen::Index m) {
  // Solve p^2 + 3p - 2m = 0 for a positive integer root.
  const double root = (-3.0 + std::sqrt(9.0 + 8.0 * static_cast<double>(m))) / 2.0;
  const int p = static_cast<int>(std::lround(root));
  if (m < 2 || p < 1 || param_count(p) != m) {
    std::ostringstream msg;
    msg << "parameter vector of length " << m << " does not match any target dimension";
    throw InvalidArgument(msg.str());
  }
  return p;
}

double ScaleMatrix::log_diag_sum() const {
  return factor.diagonal().array().log().sum();
}

ScaleMatrix build_scale_matrix(ConstVecRef theta) {
  const int p = checked_dim(theta);
  ScaleMatrix out{Matrix::Zero(p, p), Vector(p)};
  for (int i = 0; i < p; ++i) {
    out.diag_exp(i) = std::exp(theta(nu_index(p, i, i)));
    out.factor(i, i) = out.diag_exp(i) + kDiagonalShift;
    for (int j = i + 1; j < p; ++j) {
      out.factor(i, j) = theta(nu_index(p, i, j));
    }
  }
  return out;
}

MomentForm to_moment_form(ConstVecRef theta) {
  const ScaleMatrix scale = build_scale_matrix(theta);
  return {theta.head(scale.dim()), covariance_from_factor(scale.factor)};
}

WhitenedResiduals whiten(ConstVecRef theta, const ScaleMatrix& scale, ConstVecRef y) {
  const int p = scale.dim();
  check_target(p, y);
  WhitenedResiduals r;
  r.z = theta.head(p) - y;
  r.eta = scale.factor.triangularView<Eigen::Upper>() * r.z;
  return r;
}

double nll(ConstVecRef theta, ConstVecRef y) {
  const int p = checked_dim(theta);
  check_target(p, y);
  // Inline evaluation of sum_i (eta_i^2 / 2 - log L_ii); this sits on the
  // line-search hot path, so no temporaries.
  double quad = 0.0;
  double log_diag = 0.0;
  for (int i = 0; i < p; ++i) {
    const double a_ii = std::exp(theta(nu_index(p, i, i))) + kDiagonalShift;
    log_diag += std::log(a_ii);
    double eta = a_ii * (theta(i) - y(i));
    for (int j = i + 1; j < p; ++j) {
      eta += theta(nu_index(p, i, j)) * (theta(j) - y(j));
    }
    quad += eta * eta;
  }
  return 0.5 * quad - log_diag + 0.5 * p * kLogTwoPi;
}

Vector score(ConstVecRef theta, ConstVecRef y) {
  const ScaleMatrix scale = build_scale_matrix(theta);
  const WhitenedResiduals r = whiten(theta, scale, y);
  const int p = scale.dim();

  Vector grad(theta.size());
  grad.head(p).noalias() = scale.factor.triangularView<Eigen::Upper>().transpose() * r.eta;
  for (int i = 0; i < p; ++i) {
    // d(-log L_ii)/dnu_ii = -exp(nu_ii) / L_ii, which is -1 up to the shift.
    grad(nu_index(p, i, i)) = scale.diag_exp(i) * (r.eta(i) * r.z(i) - 1.0 / scale.factor(i, i));
    for (int j = i + 1; j < p; ++j) {
      grad(nu_index(p, i, j)) = r.eta(i) * r.z(j);
    }
  }
  return grad;
}

Matrix fisher_information(ConstVecRef theta) {
  const ScaleMatrix scale = build_scale_matrix(theta);
  const int p = scale.dim();
  const Matrix& factor = scale.factor;
  const Matrix cov = covariance_from_factor(factor);

  Matrix info = Matrix::Zero(theta.size(), theta.size());
  // Mean block: E[d2l / dmu dmu] = L^T L. The mean/nu cross block is zero.
  info.topLeftCorner(p, p).noalias() = factor.transpose() * factor;

  // The nu block decouples by row of L: nu_ij and nu_kq interact only when
  // i == k.
  for (int i = 0; i < p; ++i) {
    const double e = scale.diag_exp(i);
    const double a = factor(i, i);
    const auto ii = nu_index(p, i, i);
    info(ii, ii) = e * e * (cov(i, i) + 1.0 / (a * a));
    for (int q = i + 1; q < p; ++q) {
      const auto iq = nu_index(p, i, q);
      info(ii, iq) = e * cov(i, q);
      info(iq, ii) = info(ii, iq);
      for (int j = i + 1; j < p; ++j) {
        info(nu_index(p, i, j), iq) = cov(j, q);
      }
    }
  }
  return info;
}

Vector natural_gradient(ConstVecRef theta, ConstVecRef y) {
  const Vector grad = score(theta, y);
  Matrix info = fisher_information(theta);

  Eigen::LLT<Matrix> llt(info);
  if (llt.info() == Eigen::Success) {
    return llt.solve(grad);
  }
  const double base = info.trace() / static_cast<double>(info.rows());
  for (double rel = kFirstJitter; rel <= kMaxJitter * (1.0 + 1e-12); rel *= 10.0) {
    Matrix jittered = info;
    jittered.diagonal().array() += rel * base;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) {
      return llt.solve(grad);
    }
  }
  std::ostringstream msg;
  msg << "Fisher information is singular at theta = [" << theta.transpose() << "]";
  throw NumericError(msg.str());
}

RowMatrix sample(ConstVecRef theta, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample(theta, n, rng);
}

RowMatrix sample(ConstVecRef theta, Eigen::Index n, std::mt19937_64& rng) {
  if (n < 1) {
    throw InvalidArgument("sample count must be at least 1");
  }
  const ScaleMatrix scale = build_scale_matrix(theta);
  const int p = scale.dim();
  std::normal_distribution<double> normal;

  RowMatrix out(n, p);
  Vector u(p);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int i = 0; i < p; ++i) {
      u(i) = normal(rng);
    }
    // L w = u gives Cov(w) = L^{-1} L^{-T} = Sigma.
    scale.factor.triangularView<Eigen::Upper>().solveInPlace(u);
    out.row(r) = (theta.head(p) + u).transpose();
  }
  return out;
}

ThetaVector fit_theta_from_moments(ConstVecRef mean, const Matrix& covariance) {
  const auto p = mean.size();
  if (p < 1 || covariance.rows() != p || covariance.cols() != p) {
    throw InvalidArgument("mean and covariance dimensions disagree");
  }
  if (!mean.allFinite() || !covariance.allFinite()) {
    throw InvalidArgument("moments contain non-finite entries");
  }
  const Matrix sym = 0.5 * (covariance + covariance.transpose());
  Eigen::LLT<Matrix> cov_llt(sym);
  if (cov_llt.info() != Eigen::Success) {
    throw InvalidArgument("covariance is not symmetric positive definite");
  }
  Matrix precision = cov_llt.solve(Matrix::Identity(p, p));
  precision = 0.5 * (precision + precision.transpose());
  Eigen::LLT<Matrix> prec_llt(precision);
  if (prec_llt.info() != Eigen::Success) {
    throw InvalidArgument("covariance is too ill-conditioned to invert");
  }
  const Matrix upper = prec_llt.matrixU();

  const int dim = static_cast<int>(p);
  ThetaVector theta(param_count(dim));
  theta.head(p) = mean;
  for (int i = 0; i < dim; ++i) {
    const double shifted = upper(i, i) - kDiagonalShift;
    if (!(shifted > 0.0)) {
      throw InvalidArgument("covariance too large for the diagonal shift of the precision factor");
    }
    theta(nu_index(dim, i, i)) = std::log(shifted);
    for (int j = i + 1; j < dim; ++j) {
      theta(nu_index(dim, i, j)) = upper(i, j);
    }
  }
  return theta;
}

ThetaVector marginal_mle(ConstRowRef y) {
  const auto n = y.rows();
  const auto p = y.cols();
  if (p < 1) {
    throw DataError("targets have no columns");
  }
  if (n <= p) {
    std::ostringstream msg;
    msg << "marginal fit needs more rows than target columns (n = " << n << ", p = " << p << ")";
    throw DataError(msg.str());
  }
  if (!y.allFinite()) {
    throw DataError("targets contain non-finite values");
  }
  const Vector mean = y.colwise().mean().transpose();
  const RowMatrix centered = y.rowwise() - mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);

  Eigen::LLT<Matrix> llt(cov);
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Matrix lower = llt.matrixL();
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!(lower(i, i) * lower(i, i) > kSingularPivotRatio * cov(i, i))) {
        singular = true;
      }
    }
  }
  if (singular) {
    throw DataError(
        "sample covariance of the targets is singular; add jitter to the targets or supply more "
        "(non-collinear) rows");
  }
  return fit_theta_from_moments(mean, cov);
}

double kl_divergence(ConstVecRef theta_p, ConstVecRef theta_q) {
  if (theta_p.size() != theta_q.size()) {
    throw InvalidArgument("KL divergence between distributions of different dimension");
  }
  const ScaleMatrix lp = build_scale_matrix(theta_p);
  const ScaleMatrix lq = build_scale_matrix(theta_q);
  const int p = lp.dim();

  // tr(Sigma_q^{-1} Sigma_p) = ||L_q L_p^{-1}||_F^2
  const Matrix mixed_t =
      lp.factor.transpose().triangularView<Eigen::Lower>().solve(lq.factor.transpose());
  const double trace_term = mixed_t.squaredNorm();
  const Vector delta = theta_q.head(p) - theta_p.head(p);
  const double quad = (lq.factor.triangularView<Eigen::Upper>() * delta).squaredNorm();
  // 1/2 ln(|Sigma_q| / |Sigma_p|) = sum log L_p,ii - sum log L_q,ii
  const double half_log_det_ratio = lp.log_diag_sum() - lq.log_diag_sum();
  const double kl = 0.5 * (trace_term + quad - p) + half_log_det_ratio;
  return kl > 0.0 ? kl : 0.0;
}

}  // namespace mvngb::mvn
