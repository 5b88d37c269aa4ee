#pragma once

// Reference computations used by the tests. Nothing here calls into the
// library's density, gradient or Fisher code: densities go through a dense
// covariance matrix, sampling through the Cholesky factor of the covariance,
// and derivatives through finite differences.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline int dim_of(Eigen::Index m) {
  int p = 0;
  while ((p * p + 3 * p) / 2 < m) ++p;
  return p;
}

// Upper factor of the precision built straight from the parameter layout.
inline MatrixXd precision_factor(const VectorXd& theta) {
  const int p = dim_of(theta.size());
  MatrixXd l = MatrixXd::Zero(p, p);
  Eigen::Index k = p;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j, ++k) {
      l(i, j) = (i == j) ? std::exp(theta(k)) + 1e-6 : theta(k);
    }
  }
  return l;
}

inline VectorXd mean_of(const VectorXd& theta) { return theta.head(dim_of(theta.size())); }

inline MatrixXd covariance_of(const VectorXd& theta) {
  const MatrixXd l = precision_factor(theta);
  return (l.transpose() * l).inverse();
}

// -log N(y; mu, Sigma) with Sigma formed explicitly.
inline double nll(const VectorXd& theta, const VectorXd& y) {
  const MatrixXd cov = covariance_of(theta);
  const VectorXd r = y - mean_of(theta);
  const double quad = r.dot(cov.fullPivLu().solve(r));
  const double p = static_cast<double>(r.size());
  return 0.5 * quad + 0.5 * std::log(cov.determinant()) + 0.5 * p * std::log(2 * std::numbers::pi);
}

// Fourth-order central differences of f at x.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double h = 1e-3) {
  VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    auto at = [&](double step) {
      VectorXd xs = x;
      xs(k) += step;
      return f(xs);
    };
    g(k) = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  }
  return g;
}

// Draws from N(mean, cov) through the lower Cholesky factor of cov.
class Sampler {
 public:
  Sampler(const VectorXd& theta, std::uint64_t seed)
      : mean_(mean_of(theta)), chol_(covariance_of(theta).llt().matrixL()), rng_(seed) {}

  VectorXd draw() {
    VectorXd u(mean_.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = normal_(rng_);
    return mean_ + chol_ * u;
  }

 private:
  VectorXd mean_;
  MatrixXd chol_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

inline VectorXd random_theta(int p, std::mt19937_64& rng, double nu_scale = 0.5) {
  std::normal_distribution<double> n01;
  VectorXd theta((p * p + 3 * p) / 2);
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    theta(k) = (k < p ? 1.0 : nu_scale) * n01(rng);
  }
  return theta;
}

// Best single split of (x, t) by exhaustive search: every feature, every
// midpoint between distinct sorted values. Returns the SSE after the split.
struct SplitResult {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double sse = 0.0;
};

inline double sse(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double e : v) s += (e - mean) * (e - mean);
  return s;
}

inline SplitResult exhaustive_split(const std::vector<std::vector<double>>& rows,
                                    const std::vector<double>& t, std::size_t min_leaf) {
  SplitResult best;
  if (rows.empty()) return best;
  const std::size_t d = rows.front().size();
  for (std::size_t f = 0; f < d; ++f) {
    std::vector<double> values;
    for (const auto& r : rows) values.push_back(r[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double thr = 0.5 * (values[k] + values[k + 1]);
      std::vector<double> left, right;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        (rows[i][f] <= thr ? left : right).push_back(t[i]);
      }
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      const double s = sse(left) + sse(right);
      if (!best.found || s < best.sse) {
        best = {true, static_cast<int>(f), thr, s};
      }
    }
  }
  return best;
}

}  // namespace oracle
