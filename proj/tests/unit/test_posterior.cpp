#include <doctest.h>

#include <cmath>
#include <map>

#include "optree/posterior.hpp"
#include "test_support.hpp"

using namespace optree;

namespace {

GWParams custom_prior(int depth, std::initializer_list<std::pair<NodeIndex, double>> splits) {
  GWParams params{1.0, depth, 0, SplitProbabilities(depth)};
  for (const auto& [node, p] : splits) params.split.set(node, p);
  return params;
}

}  // namespace

TEST_CASE("per-node Bayes factor") {
  const auto counts_for = [](std::vector<double> data) { return build_counts(data, 1); };
  CHECK(log_nu({0, 0}, counts_for({}), 1.0) == 0.0);
  // 4 B(2,2) / B(1,1) = 2/3 and 4 B(3,1) = 4/3.
  CHECK(log_nu({0, 0}, counts_for({0.25, 0.75}), 1.0) == doctest::Approx(-0.40546510810816444).epsilon(1e-14));
  CHECK(log_nu({0, 0}, counts_for({0.1, 0.2}), 1.0) == doctest::Approx(0.28768207245178085).epsilon(1e-14));
  CHECK_THROWS_AS(log_nu({1, 0}, counts_for({0.1}), 1.0), std::invalid_argument);

  // Large counts stay finite.
  const CountTable big = CountTable::from_finest_level(1, std::vector<std::int64_t>{60000, 40000});
  CHECK(std::isfinite(log_nu({0, 0}, big, 1.0)));
}

TEST_CASE("fit: hand-solved one-level model") {
  const std::vector<double> data{0.25, 0.75};
  const auto prior = custom_prior(1, {{{0, 0}, 0.5}});
  const auto fp = fit(build_counts(data, 1), prior, 1.0);
  CHECK(std::exp(fp.log_phi({0, 0})) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
  CHECK(fp.split_probability({0, 0}) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(fp.split_probability({1, 0}) == 0.0);
  CHECK(fp.log_phi({1, 1}) == 0.0);
  CHECK(odds_identity_residual(fp) < 1e-12);
}

TEST_CASE("fit: no data returns the prior") {
  const auto prior = make_gw_params(1.7, 5, 2);
  const auto fp = fit(build_counts({}, 5), prior, 0.8);
  for (int l = 0; l <= 5; ++l) {
    for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
      CHECK(fp.split_probability({l, k}) == doctest::Approx(prior.split[{l, k}]).epsilon(1e-14));
      CHECK(std::abs(fp.log_phi({l, k})) < 1e-14);
    }
  }
}

TEST_CASE("fit: argument checks") {
  const auto prior = make_gw_params(1.1, 3, 0);
  CHECK_THROWS_AS(fit(build_counts({}, 3), prior, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fit(build_counts({}, 3), prior, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(fit(build_counts({}, 2), prior, 1.0), std::invalid_argument);
}

TEST_CASE("fit: structural properties at realistic n") {
  Rng rng(4);
  std::vector<double> data(100000);
  for (auto& x : data) x = std::pow(uniform01(rng), 1.5);
  const auto prior = make_gw_params(1.1, 9, 4);
  const auto fp = fit(build_counts(data, 9), prior, 1.0);
  for (int l = 0; l <= 9; ++l) {
    for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
      const double p = fp.split_probability({l, k});
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      if (l < 4) CHECK(p == 1.0);
      if (l == 9) CHECK(p == 0.0);
    }
  }
  CHECK(std::isfinite(fp.log_phi({0, 0})));
  CHECK(odds_identity_residual(fp) < 1e-9);
}

TEST_CASE("conjugacy against enumeration with an urn-scheme marginal") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int depth = 1 + static_cast<int>(rng() % 3);
    const auto n = static_cast<std::size_t>(rng() % 7);
    std::vector<double> data(n);
    for (auto& x : data) x = uniform01(rng);
    const double a = std::array{0.5, 1.0, 2.0}[rng() % 3];
    const double gamma = std::array{1.1, 2.0, 8.0}[rng() % 3];
    const auto prior = make_gw_params(gamma, depth, 0);
    const auto counts = build_counts(data, depth);
    const auto fp = fit(counts, prior, a);
    const auto trees = enumerate_trees(depth);
    const auto oracle = testing::enumerated_posterior(trees, prior.split, data, a);
    for (std::size_t i = 0; i < trees.size(); ++i) {
      CHECK(std::abs(std::exp(tree_log_prior(trees[i], fp.split())) - oracle[i]) <= 1e-9);
      CHECK(log_tree_marginal(trees[i], counts, a) ==
            doctest::Approx(testing::urn_log_marginal(trees[i], data, a)).epsilon(1e-12).scale(1.0));
    }
    for (int l = 0; l < depth; ++l) {
      for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < trees.size(); ++i) mass += trees[i].is_interior({l, k}) ? oracle[i] : 0.0;
        CHECK(std::abs(node_interior_marginal(fp, {l, k}) - mass) <= 1e-10);
      }
    }
    CHECK(odds_identity_residual(fp) < 1e-9);
  }
}

TEST_CASE("node interior marginals") {
  const auto prior = custom_prior(3, {{{0, 0}, 0.9}, {{1, 0}, 0.0}, {{1, 1}, 0.5}, {{2, 2}, 0.5}});
  const std::vector<double> data{0.1, 0.6, 0.61, 0.9};
  const auto fp = fit(build_counts(data, 3), prior, 1.0);
  CHECK(node_interior_marginal(fp, {0, 0}) == doctest::Approx(fp.split_probability({0, 0})));
  CHECK(node_interior_marginal(fp, {1, 0}) == 0.0);
  CHECK(node_interior_marginal(fp, {2, 0}) == 0.0);
  CHECK(node_interior_marginal(fp, {3, 0}) == 0.0);
  CHECK(node_interior_marginal(fp, {2, 2}) <= node_interior_marginal(fp, {1, 1}));
  CHECK(node_interior_marginal(fp, {1, 1}) <= node_interior_marginal(fp, {0, 0}));
}

TEST_CASE("posterior tree sampling") {
  Rng rng(8);
  SUBCASE("zero split probabilities give the root") {
    const auto fp = fit(build_counts({}, 3), custom_prior(3, {}), 1.0);
    for (int i = 0; i < 10; ++i) CHECK(sample_posterior_tree(fp, rng) == FullBinaryTree());
  }
  SUBCASE("flat levels always split") {
    const std::vector<double> data{0.1, 0.2, 0.9};
    const auto fp = fit(build_counts(data, 5), make_gw_params(3.0, 5, 3), 1.0);
    for (int i = 0; i < 200; ++i) {
      const auto t = sample_posterior_tree(fp, rng);
      for (int l = 0; l < 3; ++l) {
        for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) CHECK(t.is_interior({l, k}));
      }
    }
  }
  SUBCASE("empirical law matches the analytic posterior (TV < 0.02)") {
    const auto prior = custom_prior(2, {{{0, 0}, 0.6}, {{1, 0}, 0.5}, {{1, 1}, 0.3}});
    const std::vector<double> data{0.05, 0.3, 0.35, 0.8};
    const auto fp = fit(build_counts(data, 2), prior, 1.0);
    const auto trees = enumerate_trees(2);
    const auto oracle = testing::enumerated_posterior(trees, prior.split, data, 1.0);
    std::map<std::vector<NodeIndex>, int> freq;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++freq[sample_posterior_tree(fp, rng).nodes()];
    double tv = 0.0;
    for (std::size_t i = 0; i < trees.size(); ++i) tv += std::abs(freq[trees[i].nodes()] / double(draws) - oracle[i]);
    CHECK(0.5 * tv < 0.02);
  }
}

TEST_CASE("posterior density sampling") {
  Rng rng(12);
  SUBCASE("root-only tree gives the uniform density") {
    const auto fp = fit(build_counts(std::vector<double>{0.3}, 2), custom_prior(2, {}), 1.0);
    CHECK(sample_posterior_density(fp, rng) == DyadicHistogram());
  }
  SUBCASE("depth-1 left mass has mean (a + N0) / (2a + N)") {
    const std::vector<double> data{0.1, 0.2, 0.3, 0.7};
    const double a = 1.5;
    const auto fp = fit(build_counts(data, 1), make_gw_params(2.0, 1, 1), a);
    const int draws = 100000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const auto h = sample_posterior_density(fp, rng);
      REQUIRE(h.cells().size() == 2);
      const double m = h.cells()[0].mass();
      sum += m;
      sq += m * m;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sq / draws - mean * mean) / draws);
    CHECK(std::abs(mean - (a + 3.0) / (2 * a + 4.0)) < 3 * se);
  }
  SUBCASE("every draw is a positive density") {
    std::vector<double> data(5000);
    for (auto& x : data) x = uniform01(rng) * uniform01(rng);
    const auto fp = fit(build_counts(data, 7), make_gw_params(1.1, 7, 3), 1.0);
    for (const auto& h : sample_posterior_densities(fp, 500, 77)) {
      CHECK(std::abs(h.total_mass() - 1.0) <= 1e-12);
      for (const auto& c : h.cells()) CHECK(c.height > 0.0);
      CHECK(h.depth() <= 7);
    }
  }
  SUBCASE("draws depend only on (seed, index)") {
    const auto fp = fit(build_counts(std::vector<double>{0.2, 0.4, 0.45}, 4), make_gw_params(1.5, 4, 1), 1.0);
    const auto a = sample_posterior_densities(fp, 40, 5);
    const auto b = sample_posterior_densities(fp, 60, 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("model file") {
  std::vector<double> data{0.1, 0.11, 0.5, 0.52, 0.9};
  const auto fp = fit(build_counts(data, 3), make_gw_params(1.1, 3, 1), 1.0);
  const auto j = to_json(fp);
  CHECK(j.at("n") == 5);
  CHECK(j.at("max_depth") == 3);
  CHECK(j.at("flat_level") == 1);
  const auto back = posterior_from_json(j);
  for (int l = 0; l <= 3; ++l) {
    for (std::int64_t k = 0; k < (std::int64_t{1} << l); ++k) {
      CHECK(back.split_probability({l, k}) == fp.split_probability({l, k}));
      CHECK(back.counts()[{l, k}] == fp.counts()[{l, k}]);
    }
  }
  auto tampered = j;
  tampered["posterior_split"][1][0] = 0.123;
  CHECK_THROWS_AS(posterior_from_json(tampered), std::invalid_argument);
  auto bad_counts = j;
  bad_counts["counts"][0][0] = 6;
  CHECK_THROWS_AS(posterior_from_json(bad_counts), std::invalid_argument);
}
