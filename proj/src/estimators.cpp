#include "optree/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optree {

MedianTree median_tree(const FittedPosterior& fp) {
  MedianTree mt;
  std::vector<NodeIndex> nodes{NodeIndex{}};
  for (int l = 0; l < fp.max_depth(); ++l) {
    for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
      const NodeIndex node{l, k};
      // Strict: an exact 1/2 is not interior.
      if (node_interior_marginal(fp, node) > 0.5) {
        mt.interior.push_back(node);
        nodes.push_back(node.left());
        nodes.push_back(node.right());
      }
    }
  }
  // Product-form marginals are non-increasing down the tree, so the thresholded
  // set is parent-closed; from_nodes re-checks it.
  mt.tree = FullBinaryTree::from_nodes(nodes);
  return mt;
}

DyadicHistogram median_density(const MedianTree& mt, const CountTable& counts, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("sample size must be nonnegative");
  if (mt.depth() > counts.max_depth()) throw std::invalid_argument("counts do not cover the median tree");
  std::vector<HistogramCell> cells;
  if (n == 0) return DyadicHistogram::constant(1.0);
  const auto nd = static_cast<double>(n);
  for (const NodeIndex leaf : mt.tree.leaves()) {
    // psi_lk = +-2^(l/2) on the two halves, so each ancestor contributes
    // +-2^l (N_right - N_left) / n.
    double height = 1.0;
    for (NodeIndex child = leaf; !child.is_root(); child = child.parent()) {
      const NodeIndex parent = child.parent();
      const auto diff = static_cast<double>(counts[parent.right()] - counts[parent.left()]);
      const double term = std::ldexp(diff / nd, parent.level);
      height += (child.pos & 1) ? term : -term;
    }
    cells.push_back({leaf, height});
  }
  return DyadicHistogram(std::move(cells));
}

PiecewiseLinearCdf median_cdf(const DyadicHistogram& estimate) { return cdf_of(estimate); }

DyadicHistogram clip_and_renormalize(const DyadicHistogram& h) {
  std::vector<HistogramCell> cells(h.cells().begin(), h.cells().end());
  double total = 0.0;
  for (auto& c : cells) {
    c.height = std::max(0.0, c.height);
    total += c.mass();
  }
  if (!(total > 0.0)) throw std::domain_error("histogram has no positive mass");
  for (auto& c : cells) c.height /= total;
  return DyadicHistogram(std::move(cells));
}

}  // namespace optree
