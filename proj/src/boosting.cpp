#include "mvngb/boosting.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mvngb/error.hpp"
#include "mvngb/mvn.hpp"

namespace mvngb {
namespace {

double mean_nll(const Family& family, ConstRowRef thetas, ConstRowRef y, kernels::Exec exec) {
  const Vector losses = kernels::row_nll(family, thetas, y, exec);
  return losses.sum() / static_cast<double>(losses.size());
}

RowMatrix replicate(const ThetaVector& theta, Eigen::Index rows) {
  return theta.transpose().replicate(rows, 1);
}

void check_fit_inputs(const Family& family, ConstRowRef x_train, ConstRowRef y_train,
                      ConstRowRef x_val, ConstRowRef y_val) {
  if (x_train.rows() < 1 || x_train.cols() < 1) {
    throw InvalidArgument("training design matrix is empty");
  }
  if (x_train.rows() != y_train.rows()) {
    throw InvalidArgument("training features and targets have different row counts");
  }
  if (y_train.cols() != family.target_dim()) {
    throw InvalidArgument("training targets do not match the distribution family dimension");
  }
  if (x_val.rows() != y_val.rows()) {
    throw InvalidArgument("validation features and targets have different row counts");
  }
  if (x_val.rows() > 0 &&
      (x_val.cols() != x_train.cols() || y_val.cols() != y_train.cols())) {
    throw InvalidArgument("validation set columns do not match the training set");
  }
}

}  // namespace

void BoostConfig::validate() const {
  if (max_stages < 1) {
    throw InvalidArgument("max_stages must be at least 1");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be positive");
  }
  if (patience < 0) {
    throw InvalidArgument("patience must be non-negative");
  }
  tree.validate();
}

double line_search(const Family& family, ConstRowRef thetas, ConstRowRef directions,
                   ConstRowRef y, kernels::Exec exec) {
  // Slot 0 holds the unmoved loss.
  std::array<double, kLineSearchSteps.size() + 1> steps{};
  std::copy(kLineSearchSteps.begin(), kLineSearchSteps.end(), steps.begin() + 1);
  const Vector totals = kernels::step_losses(family, thetas, directions, y, steps, exec);

  Eigen::Index best = 1;
  for (Eigen::Index k = 2; k < totals.size(); ++k) {
    if (totals(k) < totals(best)) {
      best = k;
    }
  }
  if (totals(best) > totals(0)) {
    return kLineSearchSteps.front();
  }
  return steps[best];
}

BoostModel fit(const Family& family, ConstRowRef x_train, ConstRowRef y_train, ConstRowRef x_val,
               ConstRowRef y_val, const BoostConfig& config) {
  config.validate();
  check_fit_inputs(family, x_train, y_train, x_val, y_val);
  const auto exec = config.exec;
  const bool have_val = x_val.rows() > 0;

  BoostModel model;
  model.family = family.tag();
  model.n_features = static_cast<int>(x_train.cols());
  model.config = config;
  model.theta0 = family.marginal_mle(y_train);

  const SortedFeatures sorted(x_train);
  RowMatrix thetas = replicate(model.theta0, x_train.rows());
  RowMatrix val_thetas = replicate(model.theta0, x_val.rows());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  double best_val = have_val ? mean_nll(family, val_thetas, y_val, exec) : nan;
  model.history.push_back({0, 0.0, mean_nll(family, thetas, y_train, exec), best_val});

  for (int b = 1; b <= config.max_stages; ++b) {
    RowMatrix grads;
    try {
      grads = kernels::gradients(family, thetas, y_train, config.natural_gradient, exec);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "boosting stage " << b << ": " << e.what();
      throw NumericError(msg.str());
    }

    Stage stage;
    stage.trees = kernels::fit_trees(sorted, grads, config.tree, exec);
    const RowMatrix step = kernels::predict_trees(stage.trees, x_train, exec);
    stage.rho = line_search(family, thetas, step, y_train, exec);
    const double scale = config.learning_rate * stage.rho;
    thetas -= scale * step;

    StageRecord record{b, stage.rho, mean_nll(family, thetas, y_train, exec), nan};
    bool stop = false;
    if (have_val) {
      val_thetas -= scale * kernels::predict_trees(stage.trees, x_val, exec);
      record.val_nll = mean_nll(family, val_thetas, y_val, exec);
      if (record.val_nll < best_val) {
        best_val = record.val_nll;
        model.best_stage = b;
      } else if (b - model.best_stage > config.patience) {
        stop = true;
      }
    }
    model.stages.push_back(std::move(stage));
    model.history.push_back(record);
    if (stop) {
      break;
    }
  }
  if (!have_val) {
    model.best_stage = static_cast<int>(model.stages.size());
  }
  return model;
}

BoostModel fit(ConstRowRef x_train, ConstRowRef y_train, ConstRowRef x_val, ConstRowRef y_val,
               const BoostConfig& config) {
  if (y_train.cols() < 1) {
    throw InvalidArgument("training targets have no columns");
  }
  const MvnFamily family(static_cast<int>(y_train.cols()));
  return fit(family, x_train, y_train, x_val, y_val, config);
}

RowMatrix predict_theta(const BoostModel& model, ConstRowRef x, int n_stages,
                        kernels::Exec exec) {
  if (x.cols() != model.n_features) {
    std::ostringstream msg;
    msg << "model expects " << model.n_features << " features, got " << x.cols();
    throw InvalidArgument(msg.str());
  }
  if (n_stages < 0 || n_stages > static_cast<int>(model.stages.size())) {
    throw InvalidArgument("requested stage count exceeds the fitted stages");
  }
  RowMatrix out = replicate(model.theta0, x.rows());
  for (int b = 0; b < n_stages; ++b) {
    const Stage& stage = model.stages[b];
    const double scale = model.config.learning_rate * stage.rho;
    out -= scale * kernels::predict_trees(stage.trees, x, exec);
  }
  return out;
}

IndependentModel fit_independent(ConstRowRef x_train, ConstRowRef y_train, ConstRowRef x_val,
                                 ConstRowRef y_val, const BoostConfig& config) {
  if (y_train.cols() < 1) {
    throw InvalidArgument("training targets have no columns");
  }
  if (x_val.rows() > 0 && y_val.cols() != y_train.cols()) {
    throw InvalidArgument("validation targets do not match the training targets");
  }
  const NormalFamily family;
  IndependentModel model;
  for (Eigen::Index j = 0; j < y_train.cols(); ++j) {
    const RowMatrix train_col = y_train.col(j);
    const RowMatrix val_col = x_val.rows() > 0 ? RowMatrix(y_val.col(j)) : RowMatrix(0, 1);
    model.dims.push_back(fit(family, x_train, train_col, x_val, val_col, config));
  }
  return model;
}

RowMatrix predict_theta(const IndependentModel& model, ConstRowRef x, kernels::Exec exec) {
  const int p = model.target_dim();
  const int m = mvn::param_count(p);
  RowMatrix out = RowMatrix::Zero(x.rows(), m);
  for (int j = 0; j < p; ++j) {
    const RowMatrix dim_theta = predict_theta(model.dims[j], x, exec);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out(i, j) = dim_theta(i, 0);
      // L_jj = 1 / sigma_j exactly once the diagonal shift is added back.
      const double shifted = std::exp(-dim_theta(i, 1)) - mvn::kDiagonalShift;
      if (!(shifted > 0.0)) {
        throw NumericError("predicted standard deviation too large for the precision factor");
      }
      out(i, mvn::nu_index(p, j, j)) = std::log(shifted);
    }
  }
  return out;
}

}  // namespace mvngb
