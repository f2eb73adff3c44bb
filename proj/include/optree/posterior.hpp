#pragma once

// Exact conjugate posterior of the optional Polya tree prior.
//
// Given counts N(I_eps), the posterior on trees is again GW with split
// probabilities p^X obtained bottom-up from the marginal-likelihood recursion
//
//   Phi_eps   = (1 - p_eps) + p_eps * nu_eps * Phi_eps0 * Phi_eps1,
//   p^X_eps   = p_eps * nu_eps * Phi_eps0 * Phi_eps1 / Phi_eps,
//   nu_eps    = 2^N(I_eps) B(a + N(I_eps0), a + N(I_eps1)) / B(a, a),
//
// with Phi = 1 and p^X = 0 at max depth. Given the tree, the masses are a
// Polya tree with Beta(a + N(I_eps0), a + N(I_eps1)) splits. Everything is
// carried in log space; at realistic n the raw factors overflow.

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "optree/dyadic.hpp"
#include "optree/random.hpp"
#include "optree/trees.hpp"

namespace optree {

[[nodiscard]] double log_beta(double a, double b);
/// log(exp(x) + exp(y)) without overflow.
[[nodiscard]] double log_add_exp(double x, double y) noexcept;

/// log nu for the split at `node`; node.level < counts.max_depth().
double log_nu(NodeIndex node, const CountTable& counts, double a);

class FittedPosterior {
 public:
  [[nodiscard]] const CountTable& counts() const noexcept { return counts_; }
  [[nodiscard]] const GWParams& prior() const noexcept { return prior_; }
  [[nodiscard]] double beta_a() const noexcept { return a_; }
  [[nodiscard]] std::int64_t n() const noexcept { return counts_.n(); }
  [[nodiscard]] int max_depth() const noexcept { return prior_.max_depth; }

  /// p^X at a node; 0 at max depth, 1 above the flat-initialisation level.
  [[nodiscard]] double split_probability(NodeIndex node) const { return split_[node]; }
  [[nodiscard]] const SplitProbabilities& split() const noexcept { return split_; }
  /// log p^X and log(1 - p^X), each computed without cancellation.
  [[nodiscard]] double log_split(NodeIndex node) const { return log_split_[node]; }
  [[nodiscard]] double log_stop(NodeIndex node) const { return log_stop_[node]; }
  [[nodiscard]] double log_phi(NodeIndex node) const { return log_phi_[node]; }

 private:
  friend FittedPosterior fit(const CountTable&, const GWParams&, double);

  CountTable counts_;
  GWParams prior_;
  double a_ = 1.0;
  SplitProbabilities split_;
  NodeArray<double> log_split_;
  NodeArray<double> log_stop_;
  NodeArray<double> log_phi_;
};

/// Throws std::invalid_argument if a <= 0 or the count depth differs from the prior's.
FittedPosterior fit(const CountTable& counts, const GWParams& prior, double a);

/// Sum of log nu over interior nodes: log N_T(X) up to a factor shared by all trees.
double log_tree_marginal(const FullBinaryTree& tree, const CountTable& counts, double a);

/// Posterior probability that `node` is interior: product of p^X along its root path.
double node_interior_marginal(const FittedPosterior& fp, NodeIndex node);
double node_interior_log_marginal(const FittedPosterior& fp, NodeIndex node);

/// Largest relative residual of the odds identity
///   odds(p^X_e)(1-p^X_e0)(1-p^X_e1) = odds(p_e)(1-p_e0)(1-p_e1) nu_e
/// over nodes where both sides are finite and nonzero (prior p_e in (0,1), p_e0,p_e1 < 1).
double odds_identity_residual(const FittedPosterior& fp);

FullBinaryTree sample_posterior_tree(const FittedPosterior& fp, Rng& rng);

/// Tree from GW(p^X), then Beta masses along it; leaf heights 2^l * mass.
DyadicHistogram sample_posterior_density(const FittedPosterior& fp, Rng& rng);

/// Draw i uses make_rng(seed, i); the result does not depend on thread count.
std::vector<DyadicHistogram> sample_posterior_densities(const FittedPosterior& fp, std::size_t count,
                                                        std::uint64_t seed);

/// Model file: n, L_max, l0, gamma, a, per-level counts and p^X.
nlohmann::json to_json(const FittedPosterior& fp);
/// Refits from the stored counts and prior; rejects files whose p^X disagree.
FittedPosterior posterior_from_json(const nlohmann::json& j);

}  // namespace optree
