#pragma once

#include <cstdint>
#include <vector>

#include "optree/dyadic.hpp"
#include "optree/posterior.hpp"
#include "optree/trees.hpp"

namespace optree {

/// Tree whose interior nodes are those with posterior interior probability > 1/2,
/// closed by adding their children.
struct MedianTree {
  FullBinaryTree tree;
  std::vector<NodeIndex> interior;  // sorted by (level, pos)

  [[nodiscard]] int depth() const noexcept { return tree.depth(); }
};

MedianTree median_tree(const FittedPosterior& fp);

/// 1 + sum over interior nodes of the empirical Haar coefficient
/// 2^(l/2) (N(right child) - N(left child)) / n times psi_lk, as a histogram on
/// the leaves of the median tree. Identically 1 when n = 0.
DyadicHistogram median_density(const MedianTree& mt, const CountTable& counts, std::int64_t n);

PiecewiseLinearCdf median_cdf(const DyadicHistogram& estimate);

/// Display helper: negative heights set to 0, then rescaled to unit mass.
DyadicHistogram clip_and_renormalize(const DyadicHistogram& h);

}  // namespace optree
