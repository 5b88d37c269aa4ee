#include "mvngb/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mvngb/error.hpp"
#include "mvngb/mvn.hpp"

namespace mvngb::metrics {
namespace {

constexpr int kMaxGammaIterations = 1000;
constexpr double kGammaEps = 1e-16;

void check_batch(ConstRowRef thetas, ConstRowRef y) {
  if (thetas.rows() != y.rows()) {
    throw InvalidArgument("prediction and target row counts differ");
  }
  if (y.rows() == 0) {
    throw InvalidArgument("cannot evaluate metrics on an empty set");
  }
  if (mvn::dim_from_param_count(thetas.cols()) != y.cols()) {
    throw InvalidArgument("parameter width does not match target dimension");
  }
}

// Series expansion, converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxGammaIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaEps) {
      break;
    }
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxGammaIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaEps) {
      break;
    }
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_pdf(int dof, double x) {
  const double k = 0.5 * dof;
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - std::lgamma(k));
}

double mahalanobis_sq(ConstVecRef theta, ConstVecRef y) {
  const mvn::ScaleMatrix scale = mvn::build_scale_matrix(theta);
  const mvn::WhitenedResiduals r = mvn::whiten(theta, scale, y);
  return r.eta.squaredNorm();
}

// Volume of the region {z : z' Sigma^{-1} z <= q} for |Sigma| = 1:
// pi^{p/2} / Gamma(p/2 + 1) * q^{p/2}.
double region_scale(int p, double quantile) {
  const double half = 0.5 * p;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0) +
                  half * std::log(quantile));
}

double region_volume(ConstVecRef theta, double scale_factor) {
  const mvn::ScaleMatrix scale = mvn::build_scale_matrix(theta);
  // |Sigma|^{1/2} = 1 / prod_i L_ii
  return scale_factor * std::exp(-scale.log_diag_sum());
}

}  // namespace

double mean_nll(ConstRowRef thetas, ConstRowRef y) {
  check_batch(thetas, y);
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    total += mvn::nll(thetas.row(i).transpose(), y.row(i).transpose());
  }
  return total / static_cast<double>(y.rows());
}

double rmse(ConstRowRef thetas, ConstRowRef y) {
  check_batch(thetas, y);
  const auto p = y.cols();
  const double sq = (y - thetas.leftCols(p)).squaredNorm();
  return std::sqrt(sq / static_cast<double>(y.rows() * p));
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw InvalidArgument("incomplete gamma needs a > 0 and x >= 0");
  }
  if (x == 0.0) {
    return 0.0;
  }
  if (std::isinf(x)) {
    return 1.0;
  }
  return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double chi2_cdf(int dof, double x) {
  if (dof < 1) {
    throw InvalidArgument("chi-square degrees of freedom must be positive");
  }
  return x <= 0.0 ? 0.0 : gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(int dof, double alpha) {
  if (dof < 1) {
    throw InvalidArgument("chi-square degrees of freedom must be positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("quantile level must lie strictly between 0 and 1");
  }
  double lo = 0.0;
  double hi = dof + 10.0 * std::sqrt(2.0 * dof) + 10.0;
  while (chi2_cdf(dof, hi) < alpha) {
    lo = hi;
    hi *= 2.0;
  }
  // Bisection to a narrow relative bracket, then safeguarded Newton.
  for (int i = 0; i < 200 && hi - lo > 1e-8 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(dof, mid) < alpha ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 100; ++i) {
    const double pdf = chi2_pdf(dof, x);
    if (!(pdf > 0.0)) {
      break;
    }
    double next = x - (chi2_cdf(dof, x) - alpha) / pdf;
    if (next <= lo || next >= hi) {
      next = 0.5 * (lo + hi);
    }
    (chi2_cdf(dof, next) < alpha ? lo : hi) = next;
    const double change = std::abs(next - x);
    x = next;
    if (change <= 1e-15 * x) {
      break;
    }
  }
  return x;
}

bool pr_covered(ConstVecRef theta, ConstVecRef y, double alpha) {
  const int p = mvn::dim_from_param_count(theta.size());
  return mahalanobis_sq(theta, y) <= chi2_quantile(p, alpha);
}

double pr_area(ConstVecRef theta, double alpha) {
  const int p = mvn::dim_from_param_count(theta.size());
  return region_volume(theta, region_scale(p, chi2_quantile(p, alpha)));
}

MetricsReport evaluate(ConstRowRef thetas_pred, ConstRowRef y,
                       const std::optional<RowMatrix>& thetas_true, double alpha) {
  check_batch(thetas_pred, y);
  const int p = static_cast<int>(y.cols());
  const double quantile = chi2_quantile(p, alpha);
  const double scale_factor = region_scale(p, quantile);

  MetricsReport report;
  report.n_points = y.rows();
  report.pr_alpha = alpha;
  report.nll_mean = mean_nll(thetas_pred, y);
  report.rmse = rmse(thetas_pred, y);

  Eigen::Index covered = 0;
  double area = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const Vector theta = thetas_pred.row(i).transpose();
    if (mahalanobis_sq(theta, y.row(i).transpose()) <= quantile) {
      ++covered;
    }
    area += region_volume(theta, scale_factor);
  }
  report.pr_coverage = static_cast<double>(covered) / static_cast<double>(y.rows());
  report.pr_area_mean = area / static_cast<double>(y.rows());

  if (thetas_true) {
    if (thetas_true->rows() != thetas_pred.rows() || thetas_true->cols() != thetas_pred.cols()) {
      throw InvalidArgument("ground-truth parameters do not match the predictions");
    }
    double kl = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      // Divergence of the prediction from the truth, as in the simulation tables.
      kl += mvn::kl_divergence(thetas_pred.row(i).transpose(), thetas_true->row(i).transpose());
    }
    report.kl_mean = kl / static_cast<double>(y.rows());
  }
  return report;
}

Summary summarize(ConstVecRef values) {
  Summary s;
  s.count = static_cast<int>(values.size());
  if (s.count == 0) {
    s.mean = s.std_error = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = values.mean();
  if (s.count < 2) {
    s.std_error = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const double var = (values.array() - s.mean).square().sum() / (s.count - 1);
  s.std_error = std::sqrt(var / s.count);
  return s;
}

std::string pr_label(double alpha) {
  std::ostringstream out;
  out << alpha * 100.0 << "% PR";
  return out.str();
}

}  // namespace mvngb::metrics
