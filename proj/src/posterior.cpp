#include "optree/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "optree/parallel.hpp"

namespace optree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.69314718055994530942;

// Tolerance when checking a stored p^X against the refit value.
constexpr double kModelFileTolerance = 1e-12;

}  // namespace

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double log_add_exp(double x, double y) noexcept {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  const double hi = std::max(x, y);
  return hi + std::log1p(std::exp(std::min(x, y) - hi));
}

double log_nu(NodeIndex node, const CountTable& counts, double a) {
  if (node.level >= counts.max_depth()) throw std::invalid_argument("log_nu needs a node above max depth");
  const auto n0 = static_cast<double>(counts[node.left()]);
  const auto n1 = static_cast<double>(counts[node.right()]);
  if (n0 == 0.0 && n1 == 0.0) return 0.0;
  return (n0 + n1) * kLn2 + log_beta(a + n0, a + n1) - log_beta(a, a);
}

FittedPosterior fit(const CountTable& counts, const GWParams& prior, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("Beta parameter a must be positive");
  if (counts.max_depth() != prior.max_depth || prior.split.max_depth() != prior.max_depth) {
    throw std::invalid_argument("count table depth must equal the prior's max depth");
  }
  const int depth = prior.max_depth;
  FittedPosterior fp;
  fp.counts_ = counts;
  fp.prior_ = prior;
  fp.a_ = a;
  fp.split_ = SplitProbabilities(depth);
  fp.log_split_ = NodeArray<double>(depth, kNegInf);
  fp.log_stop_ = NodeArray<double>(depth, 0.0);
  fp.log_phi_ = NodeArray<double>(depth, 0.0);

  for (int l = depth - 1; l >= 0; --l) {
    for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
      const NodeIndex node{l, k};
      const double p = prior.split[node];
      if (p == 0.0) continue;  // Phi = 1, p^X = 0
      const double grow = std::log(p) + log_nu(node, counts, a) + fp.log_phi_[node.left()] +
                          fp.log_phi_[node.right()];
      if (p == 1.0) {
        // Forced split: Phi = nu Phi0 Phi1 and p^X = 1.
        fp.log_phi_[node] = grow;
        fp.log_split_[node] = 0.0;
        fp.log_stop_[node] = kNegInf;
        fp.split_.set(node, 1.0);
        continue;
      }
      const double stop = std::log1p(-p);
      const double log_phi = log_add_exp(stop, grow);
      fp.log_phi_[node] = log_phi;
      fp.log_split_[node] = grow - log_phi;
      fp.log_stop_[node] = stop - log_phi;
      fp.split_.set(node, std::min(1.0, std::exp(grow - log_phi)));
    }
  }
  return fp;
}

double log_tree_marginal(const FullBinaryTree& tree, const CountTable& counts, double a) {
  double total = 0.0;
  for (const auto& n : tree.interior_nodes()) total += log_nu(n, counts, a);
  return total;
}

double node_interior_log_marginal(const FittedPosterior& fp, NodeIndex node) {
  if (!node.valid() || node.level > fp.max_depth()) throw std::invalid_argument("node outside model depth");
  if (node.level == fp.max_depth()) return kNegInf;
  double total = 0.0;
  for (NodeIndex n = node;; n = n.parent()) {
    total += fp.log_split(n);
    if (n.is_root()) break;
  }
  return total;
}

double node_interior_marginal(const FittedPosterior& fp, NodeIndex node) {
  return std::exp(node_interior_log_marginal(fp, node));
}

double odds_identity_residual(const FittedPosterior& fp) {
  const auto& prior = fp.prior().split;
  double worst = 0.0;
  for (int l = 0; l < fp.max_depth(); ++l) {
    for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
      const NodeIndex node{l, k};
      const double p = prior[node];
      const double p0 = prior[node.left()];
      const double p1 = prior[node.right()];
      if (!(p > 0.0 && p < 1.0 && p0 < 1.0 && p1 < 1.0)) continue;
      const double lhs = fp.log_split(node) - fp.log_stop(node) + fp.log_stop(node.left()) +
                         fp.log_stop(node.right());
      const double rhs = std::log(p) - std::log1p(-p) + std::log1p(-p0) + std::log1p(-p1) +
                         log_nu(node, fp.counts(), fp.beta_a());
      if (!std::isfinite(lhs) || !std::isfinite(rhs)) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, std::abs(std::expm1(lhs - rhs)));
    }
  }
  return worst;
}

FullBinaryTree sample_posterior_tree(const FittedPosterior& fp, Rng& rng) {
  return sample_tree(fp.split(), rng);
}

DyadicHistogram sample_posterior_density(const FittedPosterior& fp, Rng& rng) {
  const FullBinaryTree tree = sample_posterior_tree(fp, rng);
  const double a = fp.beta_a();
  std::vector<HistogramCell> cells;
  struct Pending {
    NodeIndex node;
    double mass;
  };
  std::vector<Pending> stack{{NodeIndex{}, 1.0}};
  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    if (!tree.is_interior(cur.node)) {
      cells.push_back({cur.node, std::ldexp(cur.mass, cur.node.level)});
      continue;
    }
    const auto n0 = static_cast<double>(fp.counts()[cur.node.left()]);
    const auto n1 = static_cast<double>(fp.counts()[cur.node.right()]);
    std::gamma_distribution<double> left_gamma(a + n0, 1.0);
    std::gamma_distribution<double> right_gamma(a + n1, 1.0);
    double g0 = 0.0;
    double g1 = 0.0;
    do {
      g0 = left_gamma(rng);
      g1 = right_gamma(rng);
    } while (g0 + g1 == 0.0);
    const double y0 = g0 / (g0 + g1);
    stack.push_back({cur.node.right(), cur.mass * (1.0 - y0)});
    stack.push_back({cur.node.left(), cur.mass * y0});
  }
  return DyadicHistogram(std::move(cells));
}

std::vector<DyadicHistogram> sample_posterior_densities(const FittedPosterior& fp, std::size_t count,
                                                        std::uint64_t seed) {
  std::vector<DyadicHistogram> draws(count);
  parallel_for(count, [&](std::size_t i) {
    Rng rng = make_rng(seed, i);
    draws[i] = sample_posterior_density(fp, rng);
  });
  return draws;
}

nlohmann::json to_json(const FittedPosterior& fp) {
  nlohmann::json j;
  j["n"] = fp.n();
  j["max_depth"] = fp.max_depth();
  j["flat_level"] = fp.prior().flat_level;
  j["gamma"] = fp.prior().gamma;
  j["a"] = fp.beta_a();
  auto counts = nlohmann::json::array();
  auto split = nlohmann::json::array();
  for (int l = 0; l <= fp.max_depth(); ++l) {
    const auto c = fp.counts().level(l);
    const auto p = fp.split().level(l);
    counts.push_back(std::vector<std::int64_t>(c.begin(), c.end()));
    split.push_back(std::vector<double>(p.begin(), p.end()));
  }
  j["counts"] = std::move(counts);
  j["posterior_split"] = std::move(split);
  return j;
}

FittedPosterior posterior_from_json(const nlohmann::json& j) {
  const auto levels = j.at("counts").get<std::vector<std::vector<std::int64_t>>>();
  const CountTable counts = CountTable::from_levels(levels);
  if (counts.n() != j.at("n").get<std::int64_t>()) throw std::invalid_argument("model n disagrees with counts");
  const auto prior = make_gw_params(j.at("gamma").get<double>(), j.at("max_depth").get<int>(),
                                    j.at("flat_level").get<int>());
  FittedPosterior fp = fit(counts, prior, j.at("a").get<double>());
  if (j.contains("posterior_split")) {
    const auto stored = j.at("posterior_split").get<std::vector<std::vector<double>>>();
    if (stored.size() != static_cast<std::size_t>(fp.max_depth()) + 1) {
      throw std::invalid_argument("model posterior_split has wrong depth");
    }
    for (int l = 0; l <= fp.max_depth(); ++l) {
      const auto& row = stored[static_cast<std::size_t>(l)];
      const auto fresh = fp.split().level(l);
      if (row.size() != fresh.size()) throw std::invalid_argument("model posterior_split has wrong width");
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (std::abs(row[k] - fresh[k]) > kModelFileTolerance) {
          throw std::invalid_argument("model posterior_split disagrees with its counts and prior");
        }
      }
    }
  }
  return fp;
}

}  // namespace optree
