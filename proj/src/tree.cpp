#include "mvngb/tree.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <utility>

#include "mvngb/error.hpp"

namespace mvngb {
namespace {

// A split must remove more than this fraction of the node's squared error;
// anything smaller is rounding noise in the running sums.
constexpr double kMinRelativeGain = 1e-12;

double midpoint(double lo, double hi) {
  const double mid = lo + 0.5 * (hi - lo);
  // Adjacent doubles: keep the threshold strictly below hi.
  return mid < hi ? mid : lo;
}

class TreeBuilder {
 public:
  TreeBuilder(const SortedFeatures& x, ConstVecRef targets, const TreeParams& params)
      : x_(x), targets_(targets), params_(params) {
    const auto n = x.rows();
    index_.reserve(x.cols());
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      index_.push_back(x.order(f));
    }
    goes_left_.assign(n, 0);
    scratch_.resize(n);
  }

  RegressionTree build() {
    grow(0, static_cast<int>(x_.rows()), 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    int n_left = 0;
  };

  int grow(int begin, int end, int depth) {
    const int n = end - begin;
    const std::vector<int>& rows = index_[0];
    double sum = 0.0;
    for (int k = begin; k < end; ++k) {
      sum += targets_(rows[k]);
    }
    const double mean = sum / n;
    double sse = 0.0;
    for (int k = begin; k < end; ++k) {
      const double d = targets_(rows[k]) - mean;
      sse += d * d;
    }

    const int id = static_cast<int>(nodes_.size());
    RegressionTree::Node node;
    node.value = mean;
    node.n_samples = n;
    nodes_.push_back(node);

    if (depth >= params_.max_depth || n < params_.min_samples_split ||
        n < 2 * params_.min_samples_leaf || !(sse > 0.0)) {
      return id;
    }
    const Candidate best = best_split(begin, end, mean);
    if (best.feature < 0 || !(best.gain > kMinRelativeGain * sse)) {
      return id;
    }

    partition(begin, end, best);
    nodes_[id].feature = best.feature;
    nodes_[id].threshold = best.threshold;
    const int left = grow(begin, begin + best.n_left, depth + 1);
    nodes_[id].left = left;
    const int right = grow(begin + best.n_left, end, depth + 1);
    nodes_[id].right = right;
    return id;
  }

  // SSE reduction of a split with centered left sum s_L is
  // s_L^2 * n / (n_L * n_R), since the centered total is zero.
  Candidate best_split(int begin, int end, double mean) const {
    const int n = end - begin;
    const int min_leaf = params_.min_samples_leaf;
    const RowMatrix& x = x_.matrix();
    Candidate best;
    for (int f = 0; f < static_cast<int>(x.cols()); ++f) {
      const std::vector<int>& ord = index_[f];
      double left_sum = 0.0;
      for (int k = begin; k < end - 1; ++k) {
        left_sum += targets_(ord[k]) - mean;
        const int n_left = k - begin + 1;
        const int n_right = n - n_left;
        if (n_right < min_leaf) {
          break;
        }
        if (n_left < min_leaf) {
          continue;
        }
        const double lo = x(ord[k], f);
        const double hi = x(ord[k + 1], f);
        if (!(lo < hi)) {
          continue;
        }
        const double gain =
            left_sum * left_sum * static_cast<double>(n) / (static_cast<double>(n_left) * n_right);
        if (gain > best.gain) {
          best = {f, midpoint(lo, hi), gain, n_left};
        }
      }
    }
    return best;
  }

  // Stable partition of every feature's ordering so that children again own
  // contiguous, sorted ranges.
  void partition(int begin, int end, const Candidate& split) {
    const std::vector<int>& chosen = index_[split.feature];
    for (int k = begin; k < end; ++k) {
      goes_left_[chosen[k]] = (k - begin) < split.n_left ? 1 : 0;
    }
    for (auto& ord : index_) {
      int out = begin;
      int spill = 0;
      for (int k = begin; k < end; ++k) {
        if (goes_left_[ord[k]]) {
          ord[out++] = ord[k];
        } else {
          scratch_[spill++] = ord[k];
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + spill, ord.begin() + out);
    }
  }

  const SortedFeatures& x_;
  ConstVecRef targets_;
  const TreeParams& params_;
  std::vector<std::vector<int>> index_;
  std::vector<char> goes_left_;
  std::vector<int> scratch_;
  std::vector<RegressionTree::Node> nodes_;
};

}  // namespace

void TreeParams::validate() const {
  if (max_depth < 1) {
    throw InvalidArgument("max_depth must be at least 1");
  }
  if (min_samples_leaf < 1) {
    throw InvalidArgument("min_samples_leaf must be at least 1");
  }
  if (min_samples_split < 2) {
    throw InvalidArgument("min_samples_split must be at least 2");
  }
}

RegressionTree::RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) {
    throw InvalidArgument("regression tree has no nodes");
  }
  const int count = static_cast<int>(nodes_.size());
  std::vector<int> parents(count, 0);
  for (int i = 0; i < count; ++i) {
    const Node& node = nodes_[i];
    if (node.is_leaf()) {
      continue;
    }
    // Children are stored after their parent (pre-order), which also rules
    // out cycles.
    if (node.left <= i || node.right <= i || node.left >= count || node.right >= count ||
        node.left == node.right) {
      std::ostringstream msg;
      msg << "regression tree node " << i << " has invalid children";
      throw InvalidArgument(msg.str());
    }
    ++parents[node.left];
    ++parents[node.right];
  }
  for (int i = 1; i < count; ++i) {
    if (parents[i] != 1) {
      throw InvalidArgument("regression tree nodes do not form a tree");
    }
  }
}

double RegressionTree::predict(const double* x) const {
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const Node& node = nodes_[i];
    i = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes_[i].value;
}

int RegressionTree::depth() const {
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[nodes_[i].left] = level[i] + 1;
      level[nodes_[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

int RegressionTree::required_features() const {
  int needed = 0;
  for (const Node& node : nodes_) {
    needed = std::max(needed, node.feature + 1);
  }
  return needed;
}

SortedFeatures::SortedFeatures(ConstRowRef x) : x_(x) {
  if (x_.rows() < 1 || x_.cols() < 1) {
    throw InvalidArgument("cannot fit a tree on an empty design matrix");
  }
  if (!x_.allFinite()) {
    throw DataError("design matrix contains non-finite values");
  }
  order_.resize(x_.cols());
  for (Eigen::Index f = 0; f < x_.cols(); ++f) {
    auto& ord = order_[f];
    ord.resize(x_.rows());
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return x_(a, f) < x_(b, f); });
  }
}

RegressionTree fit_tree(const SortedFeatures& x, ConstVecRef targets, const TreeParams& params) {
  params.validate();
  if (targets.size() != x.rows()) {
    throw InvalidArgument("target count does not match design matrix rows");
  }
  if (!targets.allFinite()) {
    throw NumericError("tree targets contain non-finite values");
  }
  return TreeBuilder(x, targets, params).build();
}

RegressionTree fit_tree(ConstRowRef x, ConstVecRef targets, const TreeParams& params) {
  return fit_tree(SortedFeatures(x), targets, params);
}

}  // namespace mvngb
