#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "optree/trees.hpp"

using namespace optree;

namespace {

// Structural check written independently of FullBinaryTree::from_nodes.
bool is_full_binary_tree(const FullBinaryTree& t) {
  const auto nodes = t.nodes();
  const std::set<NodeIndex> set(nodes.begin(), nodes.end());
  if (!set.contains(NodeIndex{})) return false;
  for (const auto& n : nodes) {
    if (n.level == 0) continue;
    if (!set.contains(n.parent()) || !set.contains(n.sibling())) return false;
  }
  for (const auto& n : t.interior_nodes()) {
    if (!set.contains(n.left()) || !set.contains(n.right())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("full binary tree structure") {
  const std::vector<NodeIndex> fig{{0, 0}, {1, 0}, {1, 1}, {2, 2}, {2, 3}};
  const auto t = FullBinaryTree::from_nodes(fig);
  CHECK(t.depth() == 2);
  CHECK(t.size() == 5);
  CHECK(t.interior_nodes() == std::vector<NodeIndex>{{0, 0}, {1, 1}});
  CHECK(t.leaves() == std::vector<NodeIndex>{{1, 0}, {2, 2}, {2, 3}});
  CHECK(t.nodes() == fig);

  FullBinaryTree built;
  built.split({0, 0});
  built.split({1, 1});
  CHECK(built == t);
  CHECK_THROWS_AS(built.split({1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(built.split({2, 0}), std::invalid_argument);

  CHECK_THROWS_AS(FullBinaryTree::from_nodes(std::vector<NodeIndex>{{0, 0}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(FullBinaryTree::from_nodes(std::vector<NodeIndex>{{1, 0}, {1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(FullBinaryTree::from_nodes(std::vector<NodeIndex>{{0, 0}, {2, 0}, {2, 1}}),
                  std::invalid_argument);

  CHECK(tree_from_json(to_json(t)) == t);
  CHECK(to_json(t).dump() == "[[0,0],[1,0],[1,1],[2,2],[2,3]]");
}

TEST_CASE("GW prior parameters") {
  const auto p = make_gw_params(2.0, 4, 2);
  CHECK(p.split[{0, 0}] == 1.0);
  CHECK(p.split[{1, 1}] == 1.0);
  CHECK(p.split[{2, 3}] == 0.25);
  CHECK(p.split[{3, 0}] == 0.125);
  CHECK(p.split[{4, 7}] == 0.0);
  // Gamma < 1 would exceed one; capped.
  CHECK(make_gw_params(0.5, 3, 0).split[{2, 0}] == 1.0);
  CHECK_THROWS_AS(make_gw_params(0.0, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_gw_params(1.1, 3, 4), std::invalid_argument);
}

TEST_CASE("default depth and flat-initialisation rules") {
  // n = 1e4: ln n = 9.21, n / ln^2 n = 117.9 -> 6; sqrt(ln n) = 3.03 -> 4.
  CHECK(default_flat_level(10000) == 4);
  CHECK(default_max_depth(10000, 4).max_depth == 6);
  CHECK_FALSE(default_max_depth(10000, 4).clamped);
  // n = 1e5: 754.6 -> 9.
  CHECK(default_max_depth(100000, 4).max_depth == 9);
  CHECK(default_max_depth(20, 2).max_depth == 3);
  CHECK(default_max_depth(20, 2).clamped);
  CHECK(default_flat_level(1) == 0);
}

TEST_CASE("tree sampling") {
  Rng rng(1);
  SUBCASE("never splitting gives the root") {
    for (int i = 0; i < 20; ++i) CHECK(sample_tree(SplitProbabilities(5, 0.0), rng) == FullBinaryTree());
  }
  SUBCASE("always splitting gives the complete tree") {
    for (int i = 0; i < 5; ++i) CHECK(sample_tree(SplitProbabilities(5, 1.0), rng) == FullBinaryTree::complete(5));
  }
  SUBCASE("sampled trees are valid and bounded by max depth") {
    for (int i = 0; i < 2000; ++i) {
      const auto t = sample_tree(SplitProbabilities(6, 0.7), rng);
      CHECK(t.depth() <= 6);
      CHECK(is_full_binary_tree(t));
    }
  }
  SUBCASE("root split frequency") {
    const int draws = 100000;
    int root_only = 0;
    for (int i = 0; i < draws; ++i) root_only += sample_tree(SplitProbabilities(3, 0.5), rng).size() == 1;
    CHECK(std::abs(root_only / static_cast<double>(draws) - 0.5) < 0.01);
  }
  SUBCASE("Markov property: split of (1,0) given presence") {
    SplitProbabilities p(3, 0.0);
    p.set({0, 0}, 0.6);
    p.set({1, 0}, 0.35);
    p.set({1, 1}, 0.8);
    int present = 0;
    int split = 0;
    for (int i = 0; i < 100000; ++i) {
      const auto t = sample_tree(p, rng);
      if (t.contains({1, 0})) {
        ++present;
        split += t.is_interior({1, 0});
      }
    }
    const double freq = split / static_cast<double>(present);
    const double se = std::sqrt(0.35 * 0.65 / present);
    CHECK(std::abs(freq - 0.35) < 3 * se);
  }
}

TEST_CASE("tree prior") {
  SplitProbabilities p(1, 0.0);
  p.set({0, 0}, 0.5);
  CHECK(tree_log_prior(FullBinaryTree(), p) == doctest::Approx(std::log(0.5)));
  // Children at max depth contribute no stop factor.
  CHECK(tree_log_prior(FullBinaryTree::complete(1), p) == doctest::Approx(std::log(0.5)));
  CHECK(tree_log_prior(FullBinaryTree::complete(2), p) == -INFINITY);

  SplitProbabilities forced(2, 1.0);
  CHECK(tree_log_prior(FullBinaryTree(), forced) == -INFINITY);
  CHECK(tree_log_prior(FullBinaryTree::complete(2), forced) == 0.0);
}

TEST_CASE("tree enumeration") {
  const std::vector<std::size_t> expected{1, 2, 5, 26, 677};
  for (int d = 0; d <= 4; ++d) {
    const auto trees = enumerate_trees(d);
    CHECK(trees.size() == expected[static_cast<std::size_t>(d)]);
    std::set<std::vector<NodeIndex>> distinct;
    for (const auto& t : trees) {
      CHECK(is_full_binary_tree(t));
      CHECK(t.depth() <= d);
      distinct.insert(t.nodes());
    }
    CHECK(distinct.size() == trees.size());
  }
  CHECK_THROWS_AS(enumerate_trees(5), std::invalid_argument);
}

TEST_CASE("prior normalises over all trees") {
  Rng rng(21);
  for (int depth = 0; depth <= 3; ++depth) {
    const auto trees = enumerate_trees(depth);
    for (int trial = 0; trial < 20; ++trial) {
      SplitProbabilities p(depth);
      for (int l = 0; l < depth; ++l) {
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
          // Include the endpoints 0 and 1 now and then.
          const double u = uniform01(rng);
          p.set({l, k}, u < 0.1 ? 0.0 : u > 0.9 ? 1.0 : uniform01(rng));
        }
      }
      double total = 0.0;
      for (const auto& t : trees) total += std::exp(tree_log_prior(t, p));
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    for (double gamma : {1.1, 2.0, 8.0}) {
      const auto params = make_gw_params(gamma, depth, 0);
      double total = 0.0;
      for (const auto& t : trees) total += std::exp(tree_log_prior(t, params.split));
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("empirical tree law matches the prior") {
  SplitProbabilities p(2, 0.0);
  p.set({0, 0}, 0.7);
  p.set({1, 0}, 0.4);
  p.set({1, 1}, 0.55);
  const auto trees = enumerate_trees(2);
  std::map<std::vector<NodeIndex>, int> freq;
  Rng rng(99);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++freq[sample_tree(p, rng).nodes()];
  double tv = 0.0;
  for (const auto& t : trees) tv += std::abs(freq[t.nodes()] / static_cast<double>(draws) - std::exp(tree_log_prior(t, p)));
  CHECK(0.5 * tv < 0.02);
}
