#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "mvngb/boosting.hpp"
#include "mvngb/error.hpp"
#include "mvngb/metrics.hpp"
#include "mvngb/mvn.hpp"
#include "mvngb/simulation.hpp"

using namespace mvngb;
using simulation::Variant;

namespace {

struct Split {
  simulation::SimulatedDataset train, val, test;
};

Split make_split(Eigen::Index n, std::uint64_t seed) {
  return {simulation::generate(n, Variant::modified, seed),
          simulation::generate(300, Variant::modified, seed + 1),
          simulation::generate(1000, Variant::modified, seed + 2)};
}

BoostConfig small_config() {
  BoostConfig c;
  c.max_stages = 60;
  c.learning_rate = 0.1;
  c.patience = 5;
  return c;
}

double test_kl(const BoostModel& model, const Split& s) {
  const RowMatrix pred = predict_theta(model, s.test.x);
  return metrics::evaluate(pred, s.test.y, s.test.theta_true).kl_mean.value();
}

}  // namespace

TEST_CASE("config validation") {
  BoostConfig c;
  c.max_stages = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = BoostConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = BoostConfig{};
  c.patience = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = BoostConfig{};
  c.tree.max_depth = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("line search picks the grid argmin") {
  const MvnFamily family(2);
  const Split s = make_split(400, 1);
  const RowMatrix thetas = RowMatrix::Zero(400, 5);
  const RowMatrix g = kernels::gradients(family, thetas, s.train.y, true, kernels::Exec::serial);
  const double rho = line_search(family, thetas, g, s.train.y);
  const Vector losses =
      kernels::step_losses(family, thetas, g, s.train.y, kLineSearchSteps, kernels::Exec::serial);
  Eigen::Index best = 0;
  losses.minCoeff(&best);
  CHECK(rho == kLineSearchSteps[static_cast<std::size_t>(best)]);

  // Uphill direction: nothing beats standing still, so the smallest step is used.
  CHECK(line_search(family, thetas, -g, s.train.y) == kLineSearchSteps.front());
}

TEST_CASE("fit records a consistent history") {
  const Split s = make_split(500, 2);
  const BoostConfig c = small_config();
  const BoostModel m = fit(s.train.x, s.train.y, s.val.x, s.val.y, c);

  CHECK(m.family == "mvn-2");
  CHECK(m.theta0 == mvn::marginal_mle(s.train.y));
  REQUIRE(m.history.size() == m.stages.size() + 1);
  CHECK(m.history[0].stage == 0);

  // Training loss never goes up.
  for (std::size_t b = 1; b < m.history.size(); ++b) {
    CHECK(m.history[b].train_nll <= m.history[b - 1].train_nll + 1e-12);
    CHECK(std::find(kLineSearchSteps.begin(), kLineSearchSteps.end(), m.history[b].rho) !=
          kLineSearchSteps.end());
  }
  // best_stage is the earliest validation minimum.
  int argmin = 0;
  for (std::size_t b = 1; b < m.history.size(); ++b) {
    if (m.history[b].val_nll < m.history[static_cast<std::size_t>(argmin)].val_nll) {
      argmin = static_cast<int>(b);
    }
  }
  CHECK(m.best_stage == argmin);
  // Early stopping: either ran out of stages or stopped patience + 1 stages after the best.
  const int fitted = static_cast<int>(m.stages.size());
  CHECK((fitted == c.max_stages || fitted == m.best_stage + c.patience + 1));
  CHECK(fitted <= m.best_stage + c.patience + 1);
}

TEST_CASE("patience zero stops at the first non-improving stage") {
  const Split s = make_split(300, 3);
  BoostConfig c = small_config();
  c.patience = 0;
  c.learning_rate = 0.5;
  c.max_stages = 200;
  const BoostModel m = fit(s.train.x, s.train.y, s.val.x, s.val.y, c);
  const int fitted = static_cast<int>(m.stages.size());
  REQUIRE(fitted < c.max_stages);
  for (int b = 1; b < fitted; ++b) {
    CHECK(m.history[static_cast<std::size_t>(b)].val_nll <
          m.history[static_cast<std::size_t>(b - 1)].val_nll);
  }
  CHECK(m.history.back().val_nll >= m.history[static_cast<std::size_t>(fitted - 1)].val_nll);
  CHECK(m.best_stage == fitted - 1);
}

TEST_CASE("without validation data every stage is kept") {
  const Split s = make_split(300, 4);
  BoostConfig c = small_config();
  c.max_stages = 15;
  const BoostModel m = fit(s.train.x, s.train.y, RowMatrix(0, 1), RowMatrix(0, 2), c);
  CHECK(m.stages.size() == 15);
  CHECK(m.best_stage == 15);
  CHECK(std::isnan(m.history.back().val_nll));
}

TEST_CASE("predictions are the staged sum") {
  const Split s = make_split(400, 5);
  const BoostModel m = fit(s.train.x, s.train.y, s.val.x, s.val.y, small_config());
  REQUIRE(m.best_stage >= 2);
  const RowMatrix x = s.test.x.topRows(50);
  const int k = m.best_stage;
  const RowMatrix full = predict_theta(m, x, k);
  const RowMatrix prev = predict_theta(m, x, k - 1);
  const Stage& last = m.stages[static_cast<std::size_t>(k - 1)];
  RowMatrix f(x.rows(), 5);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int j = 0; j < 5; ++j) f(i, j) = last.trees[static_cast<std::size_t>(j)].predict(x.row(i).transpose());
  CHECK(((prev - m.config.learning_rate * last.rho * f) - full).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(predict_theta(m, x) == full);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    CHECK((predict_theta(m, x, 0).row(i).transpose() - m.theta0).norm() == 0.0);
  }
  CHECK_THROWS_AS(predict_theta(m, x, static_cast<int>(m.stages.size()) + 1), InvalidArgument);
  CHECK_THROWS_AS(predict_theta(m, RowMatrix::Zero(3, 2)), InvalidArgument);
}

TEST_CASE("a vanishing learning rate keeps the marginal fit") {
  const Split s = make_split(200, 6);
  BoostConfig c = small_config();
  c.learning_rate = 1e-12;
  c.max_stages = 3;
  const BoostModel m = fit(s.train.x, s.train.y, RowMatrix(0, 1), RowMatrix(0, 2), c);
  const RowMatrix pred = predict_theta(m, s.test.x);
  CHECK((pred.rowwise() - m.theta0.transpose()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fits are deterministic and independent of the execution path") {
  const Split s = make_split(400, 7);
  BoostConfig c = small_config();
  c.exec = kernels::Exec::serial;
  kernels::set_threads(3);
  const BoostModel a = fit(s.train.x, s.train.y, s.val.x, s.val.y, c);
  c.exec = kernels::Exec::parallel;
  const BoostModel b = fit(s.train.x, s.train.y, s.val.x, s.val.y, c);
  REQUIRE(a.stages.size() == b.stages.size());
  CHECK(a.best_stage == b.best_stage);
  CHECK(predict_theta(a, s.test.x, kernels::Exec::serial) ==
        predict_theta(b, s.test.x, kernels::Exec::parallel));
}

TEST_CASE("independent model assembles a diagonal precision") {
  const Split s = make_split(400, 8);
  const IndependentModel m = fit_independent(s.train.x, s.train.y, s.val.x, s.val.y, small_config());
  REQUIRE(m.target_dim() == 2);
  CHECK(m.dims[0].family == "normal");
  const RowMatrix theta = predict_theta(m, s.test.x.topRows(20));
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    const Vector row = theta.row(i).transpose();
    const auto moments = mvn::to_moment_form(row);
    CHECK(moments.covariance(0, 1) == 0.0);
    for (int j = 0; j < 2; ++j) {
      const RowMatrix uv = predict_theta(m.dims[static_cast<std::size_t>(j)], s.test.x.row(i));
      CHECK(moments.mean(j) == uv(0, 0));
      CHECK(std::sqrt(moments.covariance(j, j)) == doctest::Approx(std::exp(uv(0, 1))).epsilon(1e-10));
    }
  }
}

TEST_CASE("invalid inputs") {
  const Split s = make_split(50, 9);
  const BoostConfig c = small_config();
  CHECK_THROWS_AS(fit(s.train.x, s.train.y.topRows(10), s.val.x, s.val.y, c), InvalidArgument);
  CHECK_THROWS_AS(fit(s.train.x, s.train.y, s.val.x, s.val.y.leftCols(1), c), InvalidArgument);
  CHECK_THROWS_AS(fit(s.train.x.topRows(2), s.train.y.topRows(2), s.val.x, s.val.y, c), DataError);
}

TEST_CASE("the natural gradient matters") {
  const Split s = make_split(1000, 10);
  BoostConfig c;
  const double kl_natural = test_kl(fit(s.train.x, s.train.y, s.val.x, s.val.y, c), s);
  c.natural_gradient = false;
  const double kl_plain = test_kl(fit(s.train.x, s.train.y, s.val.x, s.val.y, c), s);
  CHECK(kl_plain >= 10.0 * kl_natural);
}
