#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mvngb/family.hpp"
#include "mvngb/kernels.hpp"
#include "mvngb/tree.hpp"
#include "mvngb/types.hpp"

namespace mvngb {

struct BoostConfig {
  int max_stages = 1000;
  double learning_rate = 0.01;
  int patience = 50;
  bool natural_gradient = true;
  TreeParams tree;
  std::uint64_t seed = 0;
  kernels::Exec exec = kernels::Exec::parallel;

  void validate() const;
};

struct Stage {
  double rho = 1.0;
  std::vector<RegressionTree> trees;  // one per parameter
};

struct StageRecord {
  int stage = 0;
  double rho = 0.0;
  double train_nll = 0.0;  // mean over training rows after the update
  double val_nll = 0.0;    // NaN without a validation set
};

struct BoostModel {
  std::string family;  // Family::tag()
  int n_features = 0;
  ThetaVector theta0;
  std::vector<Stage> stages;
  // Number of leading stages used for prediction (0 means theta0 only).
  int best_stage = 0;
  BoostConfig config;
  std::vector<StageRecord> history;  // stage 0 is the marginal fit
};

// Candidate scalings searched by line_search, ascending: 2^-10 ... 2^5.
inline constexpr std::array<double, 16> kLineSearchSteps = {
    1.0 / 1024, 1.0 / 512, 1.0 / 256, 1.0 / 128, 1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8,
    1.0 / 4,    1.0 / 2,   1.0,       2.0,       4.0,      8.0,      16.0,     32.0};

// argmin over kLineSearchSteps of sum_i nll(theta_i - rho * direction_i, y_i),
// ties to the smaller step. If no candidate improves on rho = 0 the smallest
// candidate is returned.
double line_search(const Family& family, ConstRowRef thetas, ConstRowRef directions,
                   ConstRowRef y, kernels::Exec exec = kernels::Exec::parallel);

// Natural-gradient boosting. An empty validation set disables early stopping.
BoostModel fit(const Family& family, ConstRowRef x_train, ConstRowRef y_train, ConstRowRef x_val,
               ConstRowRef y_val, const BoostConfig& config);

// Multivariate Gaussian fit with the family dimension taken from y_train.
BoostModel fit(ConstRowRef x_train, ConstRowRef y_train, ConstRowRef x_val, ConstRowRef y_val,
               const BoostConfig& config);

// theta0 - learning_rate * sum_{b < n_stages} rho_b f_b(x), one row per input.
RowMatrix predict_theta(const BoostModel& model, ConstRowRef x, int n_stages,
                        kernels::Exec exec = kernels::Exec::parallel);
inline RowMatrix predict_theta(const BoostModel& model, ConstRowRef x,
                               kernels::Exec exec = kernels::Exec::parallel) {
  return predict_theta(model, x, model.best_stage, exec);
}

// One univariate model per target column, each with its own early stopping.
struct IndependentModel {
  std::vector<BoostModel> dims;

  int target_dim() const { return static_cast<int>(dims.size()); }
};

IndependentModel fit_independent(ConstRowRef x_train, ConstRowRef y_train, ConstRowRef x_val,
                                 ConstRowRef y_val, const BoostConfig& config);

// Assembled diagonal-covariance multivariate parameters (nu_ij = 0, i < j).
RowMatrix predict_theta(const IndependentModel& model, ConstRowRef x,
                        kernels::Exec exec = kernels::Exec::parallel);

}  // namespace mvngb
