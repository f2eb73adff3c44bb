#pragma once

// Full binary trees over the dyadic partition tree and the Galton-Watson
// GW(p) prior on them.
//
// An optional Polya tree with midpoint splits, unit partition measures and
// stopping probabilities rho(I_eps) is exactly a GW(p) tree with
// p_eps = 1 - rho(I_eps), mixed with a tree-conditional Polya tree Beta(a,a).

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "optree/dyadic.hpp"
#include "optree/random.hpp"

namespace optree {

/// Node set closed under parents and siblings. Always contains the root.
/// Stored as one bitset per level.
class FullBinaryTree {
 public:
  /// Root-only tree.
  FullBinaryTree();

  /// Throws std::invalid_argument if the set is not a full binary tree.
  static FullBinaryTree from_nodes(std::span<const NodeIndex> nodes);
  static FullBinaryTree complete(int depth);

  /// Adds both children of a current leaf.
  void split(NodeIndex leaf);

  [[nodiscard]] bool contains(NodeIndex node) const noexcept;
  [[nodiscard]] bool is_interior(NodeIndex node) const noexcept { return contains(node.left()); }
  [[nodiscard]] bool is_leaf(NodeIndex node) const noexcept {
    return contains(node) && !is_interior(node);
  }
  [[nodiscard]] int depth() const noexcept { return static_cast<int>(levels_.size()) - 1; }
  [[nodiscard]] std::size_t size() const noexcept;

  /// Sorted by (level, pos).
  [[nodiscard]] std::vector<NodeIndex> nodes() const;
  [[nodiscard]] std::vector<NodeIndex> interior_nodes() const;
  /// Sorted left to right; their intervals partition [0,1).
  [[nodiscard]] std::vector<NodeIndex> leaves() const;

  friend bool operator==(const FullBinaryTree&, const FullBinaryTree&) = default;

 private:
  std::vector<std::vector<bool>> levels_;
};

nlohmann::json to_json(const FullBinaryTree& tree);
FullBinaryTree tree_from_json(const nlohmann::json& j);

/// Split probability per node of the complete tree down to max_depth.
class SplitProbabilities {
 public:
  explicit SplitProbabilities(int max_depth = 0, double fill = 0.0);

  [[nodiscard]] int max_depth() const noexcept { return p_.max_depth(); }
  /// Zero below max_depth: trees never grow past it.
  [[nodiscard]] double operator[](NodeIndex node) const noexcept {
    return node.level < max_depth() ? p_[node] : 0.0;
  }
  void set(NodeIndex node, double p);
  [[nodiscard]] std::span<const double> level(int l) const { return p_.level(l); }

 private:
  NodeArray<double> p_;
};

/// The OPT tree prior: p = 1 above the flat-initialisation level, gamma^-l
/// from there on (capped at 1), and 0 at max_depth.
struct GWParams {
  double gamma = 1.1;
  int max_depth = 0;
  int flat_level = 0;
  SplitProbabilities split;
};

GWParams make_gw_params(double gamma, int max_depth, int flat_level);

struct DepthChoice {
  int max_depth = 0;
  bool clamped = false;  // the log2(n / ln^2 n) rule fell below flat_level + 1
};

/// floor(log2(n / (ln n)^2)), at least flat_level + 1.
DepthChoice default_max_depth(std::int64_t n, int flat_level);

/// ceil(sqrt(ln n)); 0 for n <= 1.
int default_flat_level(std::int64_t n);

/// Top-down, level by level, left to right: a present node splits w.p. p.
FullBinaryTree sample_tree(const SplitProbabilities& p, Rng& rng);

/// log of prod_{interior} p * prod_{leaves above max_depth} (1 - p); -inf if impossible.
double tree_log_prior(const FullBinaryTree& tree, const SplitProbabilities& p);

/// Every full binary tree of depth <= max_depth. Limited to max_depth <= 4.
std::vector<FullBinaryTree> enumerate_trees(int max_depth);

}  // namespace optree
