#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mvngb/error.hpp"
#include "mvngb/family.hpp"
#include "mvngb/normal.hpp"
#include "oracles.hpp"

using namespace mvngb;

namespace {
double density_nll(double mu, double log_sigma, double y) {
  const double sigma = std::exp(log_sigma);
  const double pdf =
      std::exp(-0.5 * (y - mu) * (y - mu) / (sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi));
  return -std::log(pdf);
}
}  // namespace

TEST_CASE("univariate nll and score examples") {
  CHECK(normal::nll(0.0, 0.0, 0.0) == doctest::Approx(0.918939).epsilon(1e-6));
  const Eigen::Vector2d s = normal::score(0.0, 0.0, 0.0);
  CHECK(s(0) == 0.0);
  CHECK(s(1) == 1.0);
}

TEST_CASE("univariate nll against the density") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 20; ++k) {
    const double mu = n01(rng), ls = 0.5 * n01(rng), y = n01(rng);
    CHECK(normal::nll(mu, ls, y) == doctest::Approx(density_nll(mu, ls, y)).epsilon(1e-12));
  }
}

TEST_CASE("univariate score matches finite differences") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 20; ++k) {
    const double y = n01(rng);
    Eigen::VectorXd theta(2);
    theta << n01(rng), 0.5 * n01(rng);
    const Eigen::VectorXd fd = oracle::fd_gradient(
        [&](const Eigen::VectorXd& t) { return density_nll(t(0), t(1), y); }, theta);
    const Eigen::Vector2d s = normal::score(theta(0), theta(1), y);
    CHECK((s - fd).cwiseAbs().maxCoeff() < 1e-7 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("univariate Fisher and natural gradient") {
  const Eigen::Matrix2d f = normal::fisher_information(std::log(2.0));
  CHECK(f(0, 0) == doctest::Approx(0.25));
  CHECK(f(1, 1) == 2.0);
  CHECK(f(0, 1) == 0.0);

  const Eigen::Vector2d ng = normal::natural_gradient(0.3, std::log(2.0), -1.0);
  const Eigen::Vector2d want = f.inverse() * normal::score(0.3, std::log(2.0), -1.0);
  CHECK((ng - want).cwiseAbs().maxCoeff() < 1e-12);

  // Monte Carlo: score covariance equals the Fisher matrix.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> draw(0.3, 2.0);
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d s = normal::score(0.3, std::log(2.0), draw(rng));
    acc += s * s.transpose();
  }
  acc /= n;
  CHECK((acc - f).cwiseAbs().maxCoeff() < 0.07);
}

TEST_CASE("univariate marginal fit") {
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  const Eigen::Vector2d t = normal::marginal_mle(y);
  CHECK(t(0) == doctest::Approx(2.5));
  CHECK(t(1) == doctest::Approx(0.5 * std::log(1.25)));
  CHECK_THROWS_AS(normal::marginal_mle(y.head(1)), DataError);
  CHECK_THROWS_AS(normal::marginal_mle(Eigen::VectorXd::Constant(3, 1.0)), DataError);
}

TEST_CASE("family dispatch") {
  const auto mvn2 = make_family("mvn-2");
  CHECK(mvn2->tag() == "mvn-2");
  CHECK(mvn2->param_count() == 5);
  CHECK(mvn2->target_dim() == 2);
  const auto uv = make_family("normal");
  CHECK(uv->param_count() == 2);
  CHECK_THROWS_AS(make_family("mvn-0"), InvalidArgument);
  CHECK_THROWS_AS(make_family("gamma"), InvalidArgument);

  Eigen::VectorXd theta(2), y(1);
  theta << 0.0, 0.0;
  y << 1.0;
  CHECK(uv->gradient(theta, y, false)(0) == -1.0);
  CHECK(uv->gradient(theta, y, true)(1) == 0.0);
  CHECK_THROWS_AS(uv->nll(theta, Eigen::VectorXd::Zero(2)), InvalidArgument);
}
