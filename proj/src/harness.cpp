#include "optree/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "optree/parallel.hpp"

namespace optree {

namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double standard_error(double p, std::size_t m) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(m));
}

nlohmann::json optional_level(const std::optional<int>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json("auto");
}

std::optional<int> parse_optional_level(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "auto") return std::nullopt;
    throw std::invalid_argument("expected an integer or \"auto\"");
  }
  return j.get<int>();
}

void write_file(const std::filesystem::path& path, const auto& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  writer(out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

ResolvedPrior resolve_prior(const PriorConfig& prior, std::int64_t n) {
  const int flat = prior.flat_level.value_or(default_flat_level(n));
  ResolvedPrior out;
  int depth = 0;
  if (prior.max_depth) {
    depth = *prior.max_depth;
  } else {
    const DepthChoice choice = default_max_depth(n, flat);
    depth = choice.max_depth;
    out.depth_clamped = choice.clamped;
  }
  out.params = make_gw_params(prior.gamma_split, depth, flat);
  out.beta_a = prior.beta_a;
  return out;
}

FittedPosterior fit_data(std::span<const double> data, const ResolvedPrior& prior) {
  return fit(build_counts(data, prior.params.max_depth), prior.params, prior.beta_a);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"truth", {{"kind", to_string(c.truth.kind)}, {"seed", c.truth.seed}, {"resolution", c.truth.resolution}}},
          {"n", c.n},
          {"seed", c.seed},
          {"prior",
           {{"gamma_split", c.prior.gamma_split},
            {"beta_a", c.prior.beta_a},
            {"flat_level", optional_level(c.prior.flat_level)},
            {"max_depth", optional_level(c.prior.max_depth)}}},
          {"draws", c.draws},
          {"level", c.level},
          {"v_exponent", c.v_exponent},
          {"w_delta", c.w_delta},
          {"replications", c.replications}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    if (t.contains("kind")) c.truth.kind = parse_truth_kind(t.at("kind").get<std::string>());
    c.truth.seed = t.value("seed", c.truth.seed);
    c.truth.resolution = t.value("resolution", c.truth.resolution);
  }
  c.n = j.value("n", c.n);
  c.seed = j.value("seed", c.seed);
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    c.prior.gamma_split = p.value("gamma_split", c.prior.gamma_split);
    c.prior.beta_a = p.value("beta_a", c.prior.beta_a);
    if (p.contains("flat_level")) c.prior.flat_level = parse_optional_level(p.at("flat_level"));
    if (p.contains("max_depth")) c.prior.max_depth = parse_optional_level(p.at("max_depth"));
  }
  c.draws = j.value("draws", c.draws);
  c.level = j.value("level", c.level);
  c.v_exponent = j.value("v_exponent", c.v_exponent);
  c.w_delta = j.value("w_delta", c.w_delta);
  c.replications = j.value("replications", c.replications);
  if (c.n < 0) throw std::invalid_argument("n must be nonnegative");
  return c;
}

ReplicationFit fit_replication(const Truth& truth, std::int64_t n, std::uint64_t seed,
                               const PriorConfig& prior) {
  if (n < 0) throw std::invalid_argument("n must be nonnegative");
  Rng rng = make_rng(seed, kDataStream);
  std::vector<double> data = sample_truth(truth, static_cast<std::size_t>(n), rng);
  ResolvedPrior resolved = resolve_prior(prior, n);
  FittedPosterior posterior = fit_data(data, resolved);
  MedianTree median = median_tree(posterior);
  DyadicHistogram estimate = median_density(median, posterior.counts(), posterior.n());
  return {std::move(data), std::move(resolved), std::move(posterior), std::move(median), std::move(estimate)};
}

// --- Pipeline ---------------------------------------------------------------

PipelineResult run_pipeline(const ExperimentConfig& config) {
  Truth truth = make_truth(config.truth);
  ReplicationFit rep = fit_replication(truth, config.n, config.seed, config.prior);
  const auto draws = sample_posterior_densities(rep.posterior, config.draws,
                                                derive_seed(config.seed, kCalibrationStream));
  const MultiscaleWeights weights{config.w_delta};
  SupNormBand simple = band_simple(rep.posterior, rep.median, config.v_exponent);
  MultiscaleBand multiscale =
      band_multiscale(rep.posterior, rep.median, config.level, weights, config.v_exponent, draws);
  CdfBand cdf = cdf_band(rep.posterior, rep.median, config.level, draws);

  const SetEvaluation simple_eval = evaluate_set(simple, truth.density);
  const SetEvaluation multiscale_eval = evaluate_set(multiscale, truth.density);
  const SetEvaluation cdf_eval = evaluate_set(cdf, truth.cdf);

  nlohmann::json manifest;
  manifest["config"] = to_json(config);
  manifest["derived"] = {{"max_depth", rep.prior.params.max_depth},
                         {"flat_level", rep.prior.params.flat_level},
                         {"max_depth_clamped", rep.prior.depth_clamped},
                         {"median_depth", rep.median.depth()},
                         {"median_interior_nodes", rep.median.interior.size()},
                         {"sigma_n", simple.radius()},
                         {"multiscale_radius", multiscale.ball().scaled_radius()},
                         {"cdf_radius", cdf.radius()},
                         {"odds_identity_residual", odds_identity_residual(rep.posterior)}};
  manifest["seeds"] = {{"master", config.seed},
                       {"data", derive_seed(config.seed, kDataStream)},
                       {"posterior_draws", derive_seed(config.seed, kCalibrationStream)},
                       {"truth", config.truth.seed}};
  manifest["truth_coverage"] = {{"simple", simple_eval.covered},
                                {"multiscale", multiscale_eval.covered},
                                {"cdf", cdf_eval.covered}};
  manifest["diameters"] = {{"simple", simple_eval.diameter},
                           {"multiscale", multiscale_eval.diameter},
                           {"cdf", cdf_eval.diameter}};

  return PipelineResult{config,       std::move(truth), std::move(rep), std::move(simple), std::move(multiscale),
                        std::move(cdf), simple_eval,     multiscale_eval, cdf_eval,         std::move(manifest)};
}

void write_pipeline(const PipelineResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "data.txt", [&](std::ostream& o) { write_samples(o, r.fit.data); });
  write_file(dir / "model.json", [&](std::ostream& o) { o << to_json(r.fit.posterior).dump(2) << '\n'; });
  write_file(dir / "median_tree.json", [&](std::ostream& o) { o << to_json(r.fit.median.tree).dump() << '\n'; });
  write_file(dir / "median.csv", [&](std::ostream& o) { write_histogram_csv(o, r.fit.estimate); });
  write_file(dir / "median_cdf.csv", [&](std::ostream& o) { write_cdf_csv(o, median_cdf(r.fit.estimate)); });
  write_file(dir / "band_simple.csv", [&](std::ostream& o) { write_band_csv(o, r.simple); });
  write_file(dir / "band_multiscale.json", [&](std::ostream& o) { o << multiscale_summary(r.multiscale).dump(2) << '\n'; });
  write_file(dir / "cdf_band.csv", [&](std::ostream& o) { write_cdf_band_csv(o, r.cdf); });
  write_file(dir / "truth.csv", [&](std::ostream& o) { write_histogram_csv(o, r.truth.density); });
  write_file(dir / "manifest.json", [&](std::ostream& o) { o << r.manifest.dump(2) << '\n'; });
}

// --- Credibility table ------------------------------------------------------

namespace {

struct DrawDistances {
  std::vector<double> sup;
  std::vector<double> multiscale;  // scaled by sqrt(n)
  std::vector<bool> in_simple;
};

DrawDistances draw_distances(const FittedPosterior& fp, const SupNormBand& simple, const MultiscaleBall& probe,
                             std::size_t count, std::uint64_t seed) {
  DrawDistances out{std::vector<double>(count), std::vector<double>(count), std::vector<bool>(count)};
  std::vector<char> inside(count);
  parallel_for(count, [&](std::size_t i) {
    Rng rng = make_rng(seed, i);
    const DyadicHistogram draw = sample_posterior_density(fp, rng);
    out.sup[i] = simple.distance(draw);
    out.multiscale[i] = probe.scaled_distance(draw);
    inside[i] = simple.contains(draw) ? 1 : 0;
  });
  for (std::size_t i = 0; i < count; ++i) out.in_simple[i] = inside[i] != 0;
  return out;
}

}  // namespace

Table1Report reproduce_table1(const ExperimentConfig& config, std::span<const double> levels) {
  const Truth truth = make_truth(config.truth);
  const ReplicationFit rep = fit_replication(truth, config.n, config.seed, config.prior);
  const SupNormBand simple = band_simple(rep.posterior, rep.median, config.v_exponent);
  const MultiscaleBall probe(simple.center(), MultiscaleWeights{config.w_delta}, rep.posterior.max_depth(),
                             rep.posterior.n(), 0.0);

  const auto calibration = draw_distances(rep.posterior, simple, probe, config.draws,
                                          derive_seed(config.seed, kCalibrationStream));
  const auto fresh = draw_distances(rep.posterior, simple, probe, config.draws,
                                    derive_seed(config.seed, kFreshDrawStream));

  Table1Report report;
  report.n = config.n;
  report.draws = config.draws;
  report.median_depth = rep.median.depth();
  report.simple_band_credibility =
      static_cast<double>(std::count(fresh.in_simple.begin(), fresh.in_simple.end(), true)) /
      static_cast<double>(config.draws);

  const auto m = static_cast<double>(config.draws);
  for (double level : levels) {
    Table1Row row;
    row.level = level;
    row.linf_radius = quantile_radius(calibration.sup, level);
    row.ball_radius = quantile_radius(calibration.multiscale, level);
    std::size_t in_linf = 0, in_ball = 0, in_both = 0, in_band = 0, cal_linf = 0, cal_ball = 0;
    for (std::size_t i = 0; i < config.draws; ++i) {
      const bool a = fresh.sup[i] <= row.linf_radius;
      const bool b = fresh.multiscale[i] <= row.ball_radius;
      in_linf += a;
      in_ball += b;
      in_both += a && b;
      in_band += b && fresh.in_simple[i];
      cal_linf += calibration.sup[i] <= row.linf_radius;
      cal_ball += calibration.multiscale[i] <= row.ball_radius;
    }
    row.linf = static_cast<double>(in_linf) / m;
    row.ball = static_cast<double>(in_ball) / m;
    row.intersection = static_cast<double>(in_both) / m;
    row.multiscale_band = static_cast<double>(in_band) / m;
    row.product = row.linf * row.ball;
    row.se_linf = standard_error(row.linf, config.draws);
    row.se_ball = standard_error(row.ball, config.draws);
    row.se_intersection = standard_error(row.intersection, config.draws);
    row.calibration_linf = static_cast<double>(cal_linf) / m;
    row.calibration_ball = static_cast<double>(cal_ball) / m;
    report.rows.push_back(row);
  }
  return report;
}

nlohmann::json to_json(const Table1Report& report) {
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"level", r.level},
                    {"credibility_linf", r.linf},
                    {"credibility_multiscale_ball", r.ball},
                    {"credibility_multiscale_band", r.multiscale_band},
                    {"credibility_intersection", r.intersection},
                    {"independence_product", r.product},
                    {"se_linf", r.se_linf},
                    {"se_multiscale_ball", r.se_ball},
                    {"se_intersection", r.se_intersection},
                    {"linf_radius", r.linf_radius},
                    {"multiscale_radius", r.ball_radius},
                    {"calibration_linf", r.calibration_linf},
                    {"calibration_multiscale_ball", r.calibration_ball}});
  }
  return {{"n", report.n},
          {"draws", report.draws},
          {"median_depth", report.median_depth},
          {"credibility_simple_band", report.simple_band_credibility},
          {"rows", std::move(rows)}};
}

// --- Replication studies ----------------------------------------------------

RateStudy rate_study(const TruthSpec& truth_spec, std::span<const std::int64_t> ns, std::size_t replications,
                     std::uint64_t seed, const PriorConfig& prior) {
  if (ns.size() < 2 || replications == 0) throw std::invalid_argument("rate study needs >= 2 sample sizes and >= 1 replication");
  const Truth truth = make_truth(truth_spec);
  RateStudy study;
  study.truth = truth_spec.kind;
  for (const std::int64_t n : ns) {
    std::vector<double> errors(replications);
    std::vector<double> depths(replications);
    const std::uint64_t n_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    parallel_for(replications, [&](std::size_t r) {
      const ReplicationFit rep = fit_replication(truth, n, derive_seed(n_seed, kReplicationStream + r), prior);
      errors[r] = sup_distance(rep.estimate, truth.density);
      depths[r] = rep.median.depth();
    });
    study.rows.push_back({n, median_of(errors), median_of(depths)});
  }
  // Least-squares slope on log scales.
  double mx = 0.0, my = 0.0;
  for (const auto& row : study.rows) {
    mx += std::log(static_cast<double>(row.n));
    my += std::log(row.median_error);
  }
  mx /= static_cast<double>(study.rows.size());
  my /= static_cast<double>(study.rows.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& row : study.rows) {
    const double dx = std::log(static_cast<double>(row.n)) - mx;
    sxy += dx * (std::log(row.median_error) - my);
    sxx += dx * dx;
  }
  study.slope = sxy / sxx;
  return study;
}

void write_rate_csv(std::ostream& out, const RateStudy& study) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "n,median_sup_error,median_depth\n";
  for (const auto& row : study.rows) out << row.n << ',' << row.median_error << ',' << row.median_depth << '\n';
  out << "# truth=" << to_string(study.truth) << " slope=" << study.slope << '\n';
}

std::vector<ReplicationOutcome> coverage_study(const ExperimentConfig& config) {
  const Truth truth = make_truth(config.truth);
  std::vector<ReplicationOutcome> outcomes(config.replications);
  const MultiscaleWeights weights{config.w_delta};
  // Replications run serially; posterior draws inside each are parallel.
  for (std::size_t r = 0; r < config.replications; ++r) {
    const std::uint64_t rep_seed = derive_seed(config.seed, kReplicationStream + r);
    const ReplicationFit rep = fit_replication(truth, config.n, rep_seed, config.prior);
    const auto draws =
        sample_posterior_densities(rep.posterior, config.draws, derive_seed(rep_seed, kCalibrationStream));
    const MultiscaleBand multiscale =
        band_multiscale(rep.posterior, rep.median, config.level, weights, config.v_exponent, draws);
    const CdfBand cdf = cdf_band(rep.posterior, rep.median, config.level, draws);
    auto& o = outcomes[r];
    o.simple_covered = multiscale.simple().contains(truth.density);
    o.multiscale_covered = multiscale.contains(truth.density);
    o.cdf_covered = cdf.contains(truth.cdf);
    o.simple_radius = multiscale.simple().radius();
    o.cdf_radius = cdf.radius();
    o.median_depth = rep.median.depth();
    o.median_interior = rep.median.interior.size();
  }
  return outcomes;
}

std::vector<std::size_t> median_tree_sizes(const TruthSpec& truth_spec, std::int64_t n, std::size_t replications,
                                           std::uint64_t seed, const PriorConfig& prior) {
  const Truth truth = make_truth(truth_spec);
  std::vector<std::size_t> sizes(replications);
  parallel_for(replications, [&](std::size_t r) {
    sizes[r] = fit_replication(truth, n, derive_seed(seed, kReplicationStream + r), prior).median.interior.size();
  });
  return sizes;
}

}  // namespace optree
