#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "optree/harness.hpp"

using namespace optree;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("optree_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n = 2000;
  c.draws = 300;
  c.seed = 77;
  return c;
}

}  // namespace

TEST_CASE("prior resolution") {
  const auto r = resolve_prior({}, 10000);
  CHECK(r.params.flat_level == 4);
  CHECK(r.params.max_depth == 6);
  CHECK(r.params.gamma == 1.1);
  CHECK_FALSE(r.depth_clamped);
  PriorConfig fixed;
  fixed.flat_level = 2;
  fixed.max_depth = 5;
  const auto f = resolve_prior(fixed, 10000);
  CHECK(f.params.flat_level == 2);
  CHECK(f.params.max_depth == 5);
  CHECK(resolve_prior({}, 20).depth_clamped);
}

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.truth = {TruthKind::mixed, 9, 10};
  c.n = 1234;
  c.prior.flat_level = 3;
  c.level = 0.1;
  const auto back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.truth.kind == TruthKind::mixed);
  CHECK(back.prior.flat_level == 3);
  CHECK_FALSE(back.prior.max_depth.has_value());
  CHECK(to_json(c).at("prior").at("max_depth") == "auto");

  auto bad = to_json(c);
  bad["n"] = -1;
  CHECK_THROWS(config_from_json(bad));
}

TEST_CASE("pipeline is deterministic and its manifest round-trips") {
  const auto a = scratch_dir("a");
  const auto b = scratch_dir("b");
  write_pipeline(run_pipeline(small_config()), a);
  write_pipeline(run_pipeline(small_config()), b);
  for (const char* name : {"data.txt", "model.json", "median_tree.json", "median.csv", "median_cdf.csv",
                           "band_simple.csv", "band_multiscale.json", "cdf_band.csv", "truth.csv", "manifest.json"}) {
    INFO(name);
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(to_json(config_from_json(manifest.at("config"))) == to_json(small_config()));
  const auto model = posterior_from_json(nlohmann::json::parse(slurp(a / "model.json")));
  CHECK(model.n() == 2000);
  fs::remove_all(a);
  fs::remove_all(b);

  auto other = small_config();
  other.seed = 78;
  CHECK(run_pipeline(other).fit.data != run_pipeline(small_config()).fit.data);
}

TEST_CASE("n = 1e4 triangular run covers the truth with the simple band") {
  ExperimentConfig c;
  c.draws = 200;
  const auto r = run_pipeline(c);
  CHECK(r.simple_eval.covered);
  CHECK(r.manifest.at("derived").at("odds_identity_residual").get<double>() < 1e-9);
  CHECK(r.fit.estimate.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("credibility table report structure") {
  auto c = small_config();
  c.draws = 400;
  const std::vector<double> levels{0.01, 0.05, 0.1, 0.15};
  const auto report = reproduce_table1(c, levels);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    CHECK(row.product == row.linf * row.ball);
    for (double v : {row.linf, row.ball, row.intersection, row.multiscale_band, row.product}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(row.intersection <= std::min(row.linf, row.ball));
    CHECK(row.calibration_linf >= 1.0 - row.level);
    CHECK(row.calibration_ball >= 1.0 - row.level);
  }
  const auto j = to_json(report);
  CHECK(j.at("rows").size() == 4);
  CHECK(j.at("rows")[1].at("level") == 0.05);
}

TEST_CASE("rate study output") {
  const std::vector<std::int64_t> ns{256, 1024, 4096};
  const auto study = rate_study({TruthKind::triangular, 1, 12}, ns, 3, 5);
  REQUIRE(study.rows.size() == 3);
  CHECK(study.rows[0].n == 256);
  CHECK(study.slope < 0.0);
  std::ostringstream out;
  write_rate_csv(out, study);
  CHECK(out.str().rfind("n,median_sup_error,median_depth\n256,", 0) == 0);
  CHECK_THROWS_AS(rate_study({}, std::span<const std::int64_t>(ns.data(), 1), 3, 5), std::invalid_argument);
}

TEST_CASE("median-tree depth does not decrease with n") {
  const std::vector<std::int64_t> ns{1024, 4096, 16384, 65536};
  for (auto kind : {TruthKind::triangular, TruthKind::exp_brownian}) {
    const auto study = rate_study({kind, 1, 12}, ns, 5, 11);
    for (std::size_t i = 1; i < study.rows.size(); ++i) CHECK(study.rows[i].median_depth >= study.rows[i - 1].median_depth);
  }
}

TEST_CASE("coverage and tree-size studies") {
  auto c = small_config();
  c.replications = 3;
  c.draws = 200;
  const auto outcomes = coverage_study(c);
  REQUIRE(outcomes.size() == 3);
  for (const auto& o : outcomes) {
    if (o.multiscale_covered) CHECK(o.simple_covered);
    CHECK(o.simple_radius > 0.0);
  }
  const auto sizes = median_tree_sizes({}, 2000, 4, 1);
  CHECK(sizes.size() == 4);
  CHECK(median_tree_sizes({}, 2000, 4, 1) == sizes);
}
