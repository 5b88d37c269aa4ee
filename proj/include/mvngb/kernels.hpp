#pragma once

#include <span>
#include <vector>

#include "mvngb/family.hpp"
#include "mvngb/tree.hpp"
#include "mvngb/types.hpp"

// Row-parallel building blocks of one boosting stage. Every kernel has a
// serial reference path and an OpenMP path; the two are bit-identical because
// parallel work only ever writes per-row (or per-tree) slots and every
// reduction is done serially afterwards in row order.
namespace mvngb::kernels {

enum class Exec { serial, parallel };

// n x M matrix of per-row gradients (natural or ordinary). Throws
// NumericError naming the first offending row if any gradient is not finite.
RowMatrix gradients(const Family& family, ConstRowRef thetas, ConstRowRef y, bool natural,
                    Exec exec);

// Per-row negative log-likelihood.
Vector row_nll(const Family& family, ConstRowRef thetas, ConstRowRef y, Exec exec);

// sum_i nll(theta_i - step_k * direction_i, y_i) for every candidate step.
// Non-finite row losses make that candidate's total +infinity.
Vector step_losses(const Family& family, ConstRowRef thetas, ConstRowRef directions,
                   ConstRowRef y, std::span<const double> steps, Exec exec);

// One tree per column of targets.
std::vector<RegressionTree> fit_trees(const SortedFeatures& x, ConstRowRef targets,
                                      const TreeParams& params, Exec exec);

// n x trees.size() matrix of tree outputs.
RowMatrix predict_trees(const std::vector<RegressionTree>& trees, ConstRowRef x, Exec exec);

// Number of OpenMP threads the parallel path will use (1 without OpenMP).
int max_threads();
void set_threads(int threads);

}  // namespace mvngb::kernels
