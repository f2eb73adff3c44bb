#include "optree/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace optree {

FullBinaryTree::FullBinaryTree() : levels_{{true}} {}

FullBinaryTree FullBinaryTree::from_nodes(std::span<const NodeIndex> nodes) {
  FullBinaryTree tree;
  int depth = 0;
  for (const auto& n : nodes) {
    if (!n.valid()) throw std::invalid_argument("tree contains an invalid node");
    depth = std::max(depth, n.level);
  }
  if (depth > 30) throw std::invalid_argument("tree deeper than supported");
  tree.levels_.assign(static_cast<std::size_t>(depth) + 1, {});
  for (int l = 0; l <= depth; ++l) tree.levels_[static_cast<std::size_t>(l)].assign(std::size_t{1} << l, false);
  for (const auto& n : nodes) tree.levels_[static_cast<std::size_t>(n.level)][static_cast<std::size_t>(n.pos)] = true;

  if (!tree.contains(NodeIndex{})) throw std::invalid_argument("tree does not contain the root");
  for (const auto& n : nodes) {
    if (n.level == 0) continue;
    if (!tree.contains(n.parent())) throw std::invalid_argument("tree is not parent-closed");
    if (!tree.contains(n.sibling())) throw std::invalid_argument("tree is not sibling-closed");
  }
  return tree;
}

FullBinaryTree FullBinaryTree::complete(int depth) {
  if (depth < 0 || depth > 30) throw std::invalid_argument("complete tree depth out of range");
  FullBinaryTree tree;
  tree.levels_.clear();
  for (int l = 0; l <= depth; ++l) tree.levels_.emplace_back(std::size_t{1} << l, true);
  return tree;
}

void FullBinaryTree::split(NodeIndex leaf) {
  if (!is_leaf(leaf)) throw std::invalid_argument("only a present leaf can be split");
  const auto child_level = static_cast<std::size_t>(leaf.level) + 1;
  if (child_level > 30) throw std::invalid_argument("tree deeper than supported");
  if (child_level == levels_.size()) levels_.emplace_back(std::size_t{1} << child_level, false);
  levels_[child_level][static_cast<std::size_t>(2 * leaf.pos)] = true;
  levels_[child_level][static_cast<std::size_t>(2 * leaf.pos + 1)] = true;
}

bool FullBinaryTree::contains(NodeIndex node) const noexcept {
  return node.valid() && node.level <= depth() &&
         levels_[static_cast<std::size_t>(node.level)][static_cast<std::size_t>(node.pos)];
}

std::size_t FullBinaryTree::size() const noexcept {
  std::size_t total = 0;
  for (const auto& level : levels_) total += static_cast<std::size_t>(std::count(level.begin(), level.end(), true));
  return total;
}

std::vector<NodeIndex> FullBinaryTree::nodes() const {
  std::vector<NodeIndex> out;
  for (int l = 0; l <= depth(); ++l) {
    const auto& level = levels_[static_cast<std::size_t>(l)];
    for (std::size_t k = 0; k < level.size(); ++k) {
      if (level[k]) out.push_back({l, static_cast<std::int64_t>(k)});
    }
  }
  return out;
}

std::vector<NodeIndex> FullBinaryTree::interior_nodes() const {
  std::vector<NodeIndex> out;
  for (const auto& n : nodes()) {
    if (is_interior(n)) out.push_back(n);
  }
  return out;
}

std::vector<NodeIndex> FullBinaryTree::leaves() const {
  std::vector<NodeIndex> out;
  std::vector<NodeIndex> stack{NodeIndex{}};
  while (!stack.empty()) {
    const NodeIndex n = stack.back();
    stack.pop_back();
    if (is_interior(n)) {
      stack.push_back(n.right());
      stack.push_back(n.left());
    } else {
      out.push_back(n);
    }
  }
  return out;
}

nlohmann::json to_json(const FullBinaryTree& tree) {
  auto out = nlohmann::json::array();
  for (const auto& n : tree.nodes()) out.push_back({n.level, n.pos});
  return out;
}

FullBinaryTree tree_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("tree JSON must be a list of [l,k] pairs");
  std::vector<NodeIndex> nodes;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw std::invalid_argument("tree node must be [l,k]");
    nodes.push_back(make_node(pair[0].get<int>(), pair[1].get<std::int64_t>()));
  }
  return FullBinaryTree::from_nodes(nodes);
}

// --- GW prior ---------------------------------------------------------------

SplitProbabilities::SplitProbabilities(int max_depth, double fill) : p_(max_depth, fill) {
  if (max_depth < 0 || max_depth > 30) throw std::invalid_argument("max depth out of range");
  if (!(fill >= 0.0 && fill <= 1.0)) throw std::invalid_argument("split probability outside [0,1]");
  for (double& v : p_.level(max_depth)) v = 0.0;
}

void SplitProbabilities::set(NodeIndex node, double p) {
  if (!p_.covers(node)) throw std::out_of_range("node outside split-probability table");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("split probability outside [0,1]");
  if (node.level == max_depth() && p != 0.0) {
    throw std::invalid_argument("split probability at max depth must be 0");
  }
  p_[node] = p;
}

GWParams make_gw_params(double gamma, int max_depth, int flat_level) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
  if (flat_level < 0 || flat_level > max_depth) {
    throw std::invalid_argument("flat-initialisation level must lie in [0, max_depth]");
  }
  GWParams params{gamma, max_depth, flat_level, SplitProbabilities(max_depth)};
  for (int l = 0; l < max_depth; ++l) {
    const double p = l < flat_level ? 1.0 : std::min(1.0, std::pow(gamma, -l));
    for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) params.split.set({l, k}, p);
  }
  return params;
}

DepthChoice default_max_depth(std::int64_t n, int flat_level) {
  const int floor_depth = flat_level + 1;
  if (n < 2) return {floor_depth, true};
  const double ln = std::log(static_cast<double>(n));
  const int depth = static_cast<int>(std::floor(std::log2(static_cast<double>(n) / (ln * ln))));
  if (depth < floor_depth) return {floor_depth, true};
  return {depth, false};
}

int default_flat_level(std::int64_t n) {
  if (n <= 1) return 0;
  return static_cast<int>(std::ceil(std::sqrt(std::log(static_cast<double>(n)))));
}

FullBinaryTree sample_tree(const SplitProbabilities& p, Rng& rng) {
  FullBinaryTree tree;
  std::vector<NodeIndex> frontier{NodeIndex{}};
  std::vector<NodeIndex> next;
  for (int l = 0; l < p.max_depth() && !frontier.empty(); ++l) {
    next.clear();
    for (const NodeIndex n : frontier) {
      const double split = p[n];
      if (split > 0.0 && (split >= 1.0 || uniform01(rng) < split)) {
        tree.split(n);
        next.push_back(n.left());
        next.push_back(n.right());
      }
    }
    frontier.swap(next);
  }
  return tree;
}

double tree_log_prior(const FullBinaryTree& tree, const SplitProbabilities& p) {
  if (tree.depth() > p.max_depth()) return -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& n : tree.nodes()) {
    if (tree.is_interior(n)) {
      total += std::log(p[n]);
    } else if (n.level < p.max_depth()) {
      total += std::log1p(-p[n]);
    }
  }
  return total;
}

namespace {

using NodeList = std::vector<NodeIndex>;

// All subtrees rooted at `root` reaching at most `budget` levels below it.
std::vector<NodeList> subtrees(NodeIndex root, int budget) {
  std::vector<NodeList> out{{root}};
  if (budget == 0) return out;
  const auto lefts = subtrees(root.left(), budget - 1);
  const auto rights = subtrees(root.right(), budget - 1);
  for (const auto& l : lefts) {
    for (const auto& r : rights) {
      NodeList t{root};
      t.insert(t.end(), l.begin(), l.end());
      t.insert(t.end(), r.begin(), r.end());
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace

std::vector<FullBinaryTree> enumerate_trees(int max_depth) {
  if (max_depth < 0 || max_depth > 4) {
    throw std::invalid_argument("tree enumeration is limited to max_depth <= 4");
  }
  std::vector<FullBinaryTree> trees;
  for (const auto& nodes : subtrees(NodeIndex{}, max_depth)) trees.push_back(FullBinaryTree::from_nodes(nodes));
  return trees;
}

}  // namespace optree
