#include "mvngb/kernels.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mvngb/error.hpp"

namespace mvngb::kernels {
namespace {

// Runs fn(i) for i in [0, n). On failure the exception of the lowest failing
// index is rethrown, so both paths report the same error.
template <class Fn>
void for_each_index(Eigen::Index n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial) {
    for (Eigen::Index i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::exception_ptr first_error;
  Eigen::Index first_at = n;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(mvngb_kernel_error)
      {
        if (i < first_at) {
          first_at = i;
          first_error = std::current_exception();
        }
      }
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

void check_rows(ConstRowRef thetas, ConstRowRef y, const Family& family) {
  if (thetas.rows() != y.rows()) {
    throw InvalidArgument("parameter and target row counts differ");
  }
  if (thetas.cols() != family.param_count() || y.cols() != family.target_dim()) {
    throw InvalidArgument("parameter or target width does not match the distribution family");
  }
}

}  // namespace

RowMatrix gradients(const Family& family, ConstRowRef thetas, ConstRowRef y, bool natural,
                    Exec exec) {
  check_rows(thetas, y, family);
  RowMatrix out(thetas.rows(), thetas.cols());
  for_each_index(thetas.rows(), exec, [&](Eigen::Index i) {
    Vector g;
    try {
      g = family.gradient(thetas.row(i).transpose(), y.row(i).transpose(), natural);
    } catch (const InvalidParameter& e) {
      std::ostringstream msg;
      msg << "row " << i << ": " << e.what();
      throw InvalidParameter(msg.str());
    }
    if (!g.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite gradient at row " << i;
      throw NumericError(msg.str());
    }
    out.row(i) = g.transpose();
  });
  return out;
}

Vector row_nll(const Family& family, ConstRowRef thetas, ConstRowRef y, Exec exec) {
  check_rows(thetas, y, family);
  Vector out(thetas.rows());
  for_each_index(thetas.rows(), exec, [&](Eigen::Index i) {
    out(i) = family.nll(thetas.row(i).transpose(), y.row(i).transpose());
  });
  return out;
}

Vector step_losses(const Family& family, ConstRowRef thetas, ConstRowRef directions,
                   ConstRowRef y, std::span<const double> steps, Exec exec) {
  check_rows(thetas, y, family);
  if (directions.rows() != thetas.rows() || directions.cols() != thetas.cols()) {
    throw InvalidArgument("direction batch shape does not match parameter batch");
  }
  const auto k = static_cast<Eigen::Index>(steps.size());
  RowMatrix per_row(thetas.rows(), k);
  for_each_index(thetas.rows(), exec, [&](Eigen::Index i) {
    Vector moved(thetas.cols());
    for (Eigen::Index c = 0; c < k; ++c) {
      moved = thetas.row(i).transpose() - steps[c] * directions.row(i).transpose();
      double loss = std::numeric_limits<double>::infinity();
      if (moved.allFinite()) {
        loss = family.nll(moved, y.row(i).transpose());
      }
      per_row(i, c) = std::isfinite(loss) ? loss : std::numeric_limits<double>::infinity();
    }
  });
  Vector totals = Vector::Zero(k);
  for (Eigen::Index i = 0; i < per_row.rows(); ++i) {
    totals += per_row.row(i).transpose();
  }
  return totals;
}

std::vector<RegressionTree> fit_trees(const SortedFeatures& x, ConstRowRef targets,
                                      const TreeParams& params, Exec exec) {
  std::vector<RegressionTree> trees(targets.cols());
  for_each_index(targets.cols(), exec, [&](Eigen::Index m) {
    const Vector column = targets.col(m);
    trees[m] = fit_tree(x, column, params);
  });
  return trees;
}

RowMatrix predict_trees(const std::vector<RegressionTree>& trees, ConstRowRef x, Exec exec) {
  const auto m = static_cast<Eigen::Index>(trees.size());
  RowMatrix out(x.rows(), m);
  for_each_index(x.rows(), exec, [&](Eigen::Index i) {
    const double* row = x.row(i).data();
    for (Eigen::Index t = 0; t < m; ++t) {
      out(i, t) = trees[t].predict(row);
    }
  });
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) {
    omp_set_num_threads(threads);
  }
#else
  (void)threads;
#endif
}

}  // namespace mvngb::kernels
