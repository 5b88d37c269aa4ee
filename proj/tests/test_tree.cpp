#include <random>

#include "doctest.h"
#include "mvngb/error.hpp"
#include "mvngb/tree.hpp"
#include "tree_oracle.hpp"

using namespace mvngb;

namespace {

struct Instance {
  RowMatrix x;
  Vector t;
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
};

Instance random_instance(std::mt19937_64& rng, int n, int d, bool ties) {
  std::uniform_int_distribution<int> level(0, 5);
  std::normal_distribution<double> n01;
  Instance in{RowMatrix(n, d), Vector(n), {}, {}};
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int j = 0; j < d; ++j) {
      in.x(i, j) = ties ? static_cast<double>(level(rng)) : n01(rng);
      row.push_back(in.x(i, j));
    }
    in.t(i) = n01(rng) + (in.x(i, 0) > 0.5 ? 2.0 : 0.0);
    in.rows.push_back(row);
    in.targets.push_back(in.t(i));
  }
  return in;
}

}  // namespace

TEST_CASE("stump example") {
  RowMatrix x(4, 1);
  x << 0, 1, 2, 3;
  Vector t(4);
  t << 0, 0, 10, 10;
  const RegressionTree tree = fit_tree(x, t, TreeParams{1, 1, 2});
  REQUIRE(tree.nodes().size() == 3);
  CHECK(tree.nodes()[0].feature == 0);
  CHECK(tree.nodes()[0].threshold == 1.5);
  CHECK(tree.predict(Vector::Constant(1, 1.5)) == 0.0);
  CHECK(tree.predict(Vector::Constant(1, 1.6)) == 10.0);
}

TEST_CASE("constant targets give a single leaf") {
  RowMatrix x(5, 2);
  x.setRandom();
  const RegressionTree tree = fit_tree(x, Vector::Constant(5, 3.0), TreeParams{});
  CHECK(tree.nodes().size() == 1);
  CHECK(tree.predict(x.row(0).transpose()) == 3.0);
}

TEST_CASE("greedy splits match exhaustive search") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> size(2, 64), dims(1, 3), depth(1, 3), leaf(1, 4);
  for (int rep = 0; rep < 60; ++rep) {
    const Instance in = random_instance(rng, size(rng), dims(rng), rep % 2 == 0);
    const TreeParams params{depth(rng), leaf(rng), 2};
    const RegressionTree tree = fit_tree(in.x, in.t, params);
    CHECK(tree.depth() <= params.max_depth);
    CHECK(oracle::check_greedy_tree(tree, in.rows, in.targets, params) == "");
  }
}

TEST_CASE("min_samples_leaf and min_samples_split are honoured") {
  std::mt19937_64 rng(42);
  const Instance in = random_instance(rng, 50, 2, false);
  const RegressionTree tree = fit_tree(in.x, in.t, TreeParams{6, 7, 20});
  for (const auto& node : tree.nodes()) {
    CHECK(node.n_samples >= 7);
    if (!node.is_leaf()) CHECK(node.n_samples >= 20);
  }
}

TEST_CASE("presorted features are reusable") {
  std::mt19937_64 rng(43);
  const Instance a = random_instance(rng, 40, 3, true);
  const SortedFeatures sorted(a.x);
  Vector other = a.t.reverse();
  const RegressionTree t1 = fit_tree(sorted, other, TreeParams{});
  const RegressionTree t2 = fit_tree(a.x, other, TreeParams{});
  REQUIRE(t1.nodes().size() == t2.nodes().size());
  for (std::size_t i = 0; i < t1.nodes().size(); ++i) {
    CHECK(t1.nodes()[i].threshold == t2.nodes()[i].threshold);
    CHECK(t1.nodes()[i].value == t2.nodes()[i].value);
  }
}

TEST_CASE("tree input validation") {
  RowMatrix x(3, 1);
  x << 0, 1, 2;
  CHECK_THROWS_AS(fit_tree(x, Vector::Zero(2), TreeParams{}), InvalidArgument);
  CHECK_THROWS_AS(fit_tree(x, Vector::Zero(3), TreeParams{0, 1, 2}), InvalidArgument);
  CHECK_THROWS_AS(fit_tree(x, Vector::Zero(3), TreeParams{3, 0, 2}), InvalidArgument);
  CHECK_THROWS_AS(fit_tree(x, Vector::Zero(3), TreeParams{3, 1, 1}), InvalidArgument);
  Vector bad = Vector::Zero(3);
  bad(1) = NAN;
  CHECK_THROWS_AS(fit_tree(x, bad, TreeParams{}), NumericError);
  x(0, 0) = INFINITY;
  CHECK_THROWS_AS(SortedFeatures{x}, DataError);

  using Node = RegressionTree::Node;
  CHECK_THROWS_AS(RegressionTree(std::vector<Node>{}), InvalidArgument);
  Node root;
  root.feature = 0;
  root.left = 0;
  root.right = 1;
  CHECK_THROWS_AS(RegressionTree(std::vector<Node>{root, Node{}}), InvalidArgument);
}
