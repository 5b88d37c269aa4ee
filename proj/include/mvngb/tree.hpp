#pragma once

#include <vector>

#include "mvngb/types.hpp"

namespace mvngb {

struct TreeParams {
  int max_depth = 3;
  int min_samples_leaf = 1;
  int min_samples_split = 2;

  // Throws InvalidArgument on out-of-range values.
  void validate() const;
};

// Binary regression tree with scalar leaves. Rows with x[feature] <= threshold
// go left.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean training target of the node
    Eigen::Index n_samples = 0;

    bool is_leaf() const { return feature < 0; }
  };

  RegressionTree() = default;
  // Validates child links and that every node is reachable exactly once from
  // the root (node 0).
  explicit RegressionTree(std::vector<Node> nodes);

  double predict(const double* x) const;
  double predict(ConstVecRef x) const { return predict(x.data()); }

  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;
  // One past the largest feature index any split reads.
  int required_features() const;

 private:
  std::vector<Node> nodes_;
};

// Row orderings of a design matrix, one per feature, built once and shared by
// every tree fitted on the same rows (all trees of all boosting stages).
class SortedFeatures {
 public:
  explicit SortedFeatures(ConstRowRef x);

  Eigen::Index rows() const { return x_.rows(); }
  Eigen::Index cols() const { return x_.cols(); }
  const RowMatrix& matrix() const { return x_; }
  const std::vector<int>& order(Eigen::Index feature) const { return order_[feature]; }

 private:
  RowMatrix x_;
  std::vector<std::vector<int>> order_;
};

// Greedy CART growth on squared error. Split candidates are midpoints between
// consecutive distinct feature values; ties go to the lowest feature index,
// then the lowest threshold.
RegressionTree fit_tree(const SortedFeatures& x, ConstVecRef targets, const TreeParams& params);
RegressionTree fit_tree(ConstRowRef x, ConstVecRef targets, const TreeParams& params);

}  // namespace mvngb
