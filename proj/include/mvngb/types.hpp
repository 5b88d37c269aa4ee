#pragma once

#include <Eigen/Core>

namespace mvngb {

// Row-major so that a single observation (or a single parameter vector) is
// contiguous in memory.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using ConstRowRef = Eigen::Ref<const RowMatrix>;

// Unconstrained parameter vector of one predicted distribution. For the
// multivariate family the layout is mu_1..mu_p followed by the upper
// triangle of the precision factor in row-major order
// (nu_11, nu_12, ..., nu_1p, nu_22, ..., nu_pp).
using ThetaVector = Eigen::VectorXd;

}  // namespace mvngb
