// optree: command-line front end for simulation, fitting, bands and studies.

#include <CLI11.hpp>

#include <array>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "optree/harness.hpp"

namespace {

using namespace optree;

constexpr std::uint64_t kDefaultSeed = 20240601;

void with_output(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  if (path == "-") {
    writer(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  writer(out);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

FittedPosterior read_model(const std::string& path) {
  try {
    return posterior_from_json(read_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("'" + path + "' is not a model file: " + e.what());
  }
}

std::optional<int> parse_level_option(const std::string& text, const char* name) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument(std::string(name) + " must be 'auto' or a nonnegative integer, got '" + text + "'");
}

void warn_if_clamped(const ResolvedPrior& prior) {
  if (prior.depth_clamped) {
    std::cerr << "optree: warning: default max depth is below the flat level for this n; using max depth "
              << prior.params.max_depth << '\n';
  }
}

std::vector<DyadicHistogram> posterior_draws(const FittedPosterior& fp, std::size_t draws, std::uint64_t seed) {
  return sample_posterior_densities(fp, draws, derive_seed(seed, kCalibrationStream));
}

struct PriorOptions {
  double gamma_split = 1.1;
  double beta_a = 1.0;
  std::string flat_init = "auto";
  std::string max_depth = "auto";

  void attach(CLI::App* cmd) {
    cmd->add_option("--gamma-split", gamma_split, "GW decay base Gamma")->capture_default_str();
    cmd->add_option("--beta-a", beta_a, "Beta(a,a) splitting parameter")->capture_default_str();
    cmd->add_option("--flat-init", flat_init, "flat initialisation level l0, or auto")->capture_default_str();
    cmd->add_option("--max-depth", max_depth, "maximal depth L_max, or auto")->capture_default_str();
  }

  [[nodiscard]] PriorConfig config() const {
    PriorConfig p;
    p.gamma_split = gamma_split;
    p.beta_a = beta_a;
    p.flat_level = parse_level_option(flat_init, "--flat-init");
    p.max_depth = parse_level_option(max_depth, "--max-depth");
    return p;
  }
};

std::vector<std::int64_t> parse_ns(const std::string& text) {
  std::vector<std::int64_t> ns;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const long long v = std::stoll(item, &used);
    if (used != item.size() || v < 1) throw std::invalid_argument("--ns entries must be positive integers");
    ns.push_back(v);
  }
  return ns;
}

// Reports for datasets drawn under derived seeds, plus the column means.
nlohmann::json table1_replicated(const ExperimentConfig& config, const std::vector<double>& levels, std::size_t reps) {
  const std::array<const char*, 5> columns{"credibility_linf", "credibility_multiscale_ball",
                                           "credibility_multiscale_band", "credibility_intersection",
                                           "independence_product"};
  auto reports = nlohmann::json::array();
  std::vector<std::array<double, 5>> sums(levels.size(), std::array<double, 5>{});
  for (std::size_t r = 0; r < reps; ++r) {
    ExperimentConfig c = config;
    c.seed = derive_seed(config.seed, kReplicationStream + r);
    auto report = to_json(reproduce_table1(c, levels));
    for (std::size_t i = 0; i < levels.size(); ++i) {
      for (std::size_t col = 0; col < columns.size(); ++col) sums[i][col] += report["rows"][i][columns[col]].get<double>();
    }
    report["seed"] = c.seed;
    reports.push_back(std::move(report));
  }
  auto mean = nlohmann::json::array();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    nlohmann::json row{{"level", levels[i]}};
    for (std::size_t col = 0; col < columns.size(); ++col) row[columns[col]] = sums[i][col] / static_cast<double>(reps);
    mean.push_back(std::move(row));
  }
  return {{"n", config.n}, {"draws", config.draws}, {"replications", reps}, {"mean", std::move(mean)},
          {"reports", std::move(reports)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optional Polya tree density estimation on [0,1)"};
  app.require_subcommand(1);

  // simulate
  std::string sim_truth = "triangular";
  std::int64_t sim_n = 10000;
  std::uint64_t sim_seed = kDefaultSeed;
  std::uint64_t truth_seed = 1;
  int resolution = 12;
  std::string sim_out = "-";
  std::string sim_truth_out;
  auto* simulate = app.add_subcommand("simulate", "draw a sample from a synthetic truth");
  simulate->add_option("--truth", sim_truth, "triangular, exp_brownian, mixed or sine")->capture_default_str();
  simulate->add_option("--n", sim_n, "sample size")->capture_default_str()->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim_seed, "master seed")->capture_default_str();
  simulate->add_option("--truth-seed", truth_seed, "Brownian path seed")->capture_default_str();
  simulate->add_option("--resolution", resolution, "truth histogram depth")->capture_default_str();
  simulate->add_option("--out", sim_out, "sample file, one value per line")->capture_default_str();
  simulate->add_option("--truth-out", sim_truth_out, "also write the truth as histogram CSV");

  // fit
  std::string fit_input;
  std::string fit_out = "model.json";
  PriorOptions fit_prior;
  auto* fit_cmd = app.add_subcommand("fit", "compute the posterior split probabilities");
  fit_cmd->add_option("--input", fit_input, "sample file")->required();
  fit_prior.attach(fit_cmd);
  fit_cmd->add_option("--out", fit_out, "model JSON")->capture_default_str();

  // estimate
  std::string est_model;
  std::string est_out = "median.csv";
  std::string est_tree_out;
  std::string est_cdf_out;
  auto* estimate = app.add_subcommand("estimate", "median-tree density estimate");
  estimate->add_option("--model", est_model, "model JSON")->required();
  estimate->add_option("--out", est_out, "histogram CSV")->capture_default_str();
  estimate->add_option("--tree-out", est_tree_out, "median tree as a JSON list of [l,k]");
  estimate->add_option("--cdf-out", est_cdf_out, "CDF of the estimate as CSV");

  // band
  std::string band_model;
  std::string band_kind = "simple";
  double band_level = 0.05;
  std::size_t band_draws = 10000;
  double vn_exponent = kDefaultVnExponent;
  double w_delta = kDefaultWeightDelta;
  std::uint64_t band_seed = kDefaultSeed;
  std::string band_out = "band.csv";
  std::string band_summary;
  auto* band = app.add_subcommand("band", "credible band for the density");
  band->add_option("--model", band_model, "model JSON")->required();
  band->add_option("--kind", band_kind, "simple or multiscale")
      ->capture_default_str()
      ->check(CLI::IsMember({"simple", "multiscale"}));
  band->add_option("--level", band_level, "gamma; target credibility is 1 - gamma")->capture_default_str();
  band->add_option("--draws", band_draws, "posterior draws for the multiscale radius")->capture_default_str();
  band->add_option("--vn-exponent", vn_exponent, "exponent of ln n in v_n")->capture_default_str();
  band->add_option("--w-delta", w_delta, "multiscale weight exponent delta")->capture_default_str();
  band->add_option("--seed", band_seed, "seed for posterior draws")->capture_default_str();
  band->add_option("--out", band_out, "band CSV")->capture_default_str();
  band->add_option("--summary", band_summary, "multiscale radius and profile JSON (default: stdout)");

  // cdf-band
  std::string cdf_model;
  double cdf_level = 0.05;
  std::size_t cdf_draws = 10000;
  std::uint64_t cdf_seed = kDefaultSeed;
  std::string cdf_out = "cdf.csv";
  auto* cdf = app.add_subcommand("cdf-band", "credible band for the distribution function");
  cdf->add_option("--model", cdf_model, "model JSON")->required();
  cdf->add_option("--level", cdf_level, "gamma")->capture_default_str();
  cdf->add_option("--draws", cdf_draws, "posterior draws")->capture_default_str();
  cdf->add_option("--seed", cdf_seed, "seed for posterior draws")->capture_default_str();
  cdf->add_option("--out", cdf_out, "CDF band CSV")->capture_default_str();

  // reproduce table1
  ExperimentConfig t1;
  std::vector<double> t1_levels{0.01, 0.05, 0.1, 0.15};
  std::size_t t1_reps = 1;
  std::string t1_out = "table1.json";
  PriorOptions t1_prior;
  auto* reproduce = app.add_subcommand("reproduce", "rerun a published experiment");
  reproduce->require_subcommand(1);
  auto* table1 = reproduce->add_subcommand("table1", "credibility of the sup-norm band, multiscale ball and intersection");
  table1->add_option("--n", t1.n, "sample size")->capture_default_str()->check(CLI::PositiveNumber);
  table1->add_option("--draws", t1.draws, "posterior draws per set")->capture_default_str();
  table1->add_option("--seed", t1.seed, "master seed")->capture_default_str();
  table1->add_option("--levels", t1_levels, "gamma values")->capture_default_str()->delimiter(',');
  table1->add_option("--w-delta", t1.w_delta, "multiscale weight exponent delta")->capture_default_str();
  table1->add_option("--vn-exponent", t1.v_exponent, "exponent of ln n in v_n")->capture_default_str();
  table1->add_option("--reps", t1_reps, "datasets; more than one adds per-dataset reports and their mean")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  t1_prior.attach(table1);
  table1->add_option("--out", t1_out, "report JSON")->capture_default_str();

  // rate-study
  std::string rate_truth = "triangular";
  std::string rate_ns = "1024,2048,4096,8192,16384,32768,65536,131072";
  std::size_t rate_reps = 20;
  std::uint64_t rate_seed = kDefaultSeed;
  std::uint64_t rate_truth_seed = 1;
  std::string rate_out = "rates.csv";
  PriorOptions rate_prior;
  auto* rate = app.add_subcommand("rate-study", "sup-norm error of the estimator across sample sizes");
  rate->add_option("--truth", rate_truth, "truth name")->capture_default_str();
  rate->add_option("--ns", rate_ns, "comma-separated sample sizes")->capture_default_str();
  rate->add_option("--reps", rate_reps, "replications per n")->capture_default_str();
  rate->add_option("--seed", rate_seed, "master seed")->capture_default_str();
  rate->add_option("--truth-seed", rate_truth_seed, "Brownian path seed")->capture_default_str();
  rate_prior.attach(rate);
  rate->add_option("--out", rate_out, "CSV")->capture_default_str();

  // run
  std::string run_config;
  std::string run_dir = "run";
  auto* run = app.add_subcommand("run", "full pipeline from an experiment config JSON into a directory");
  run->add_option("--config", run_config, "experiment config JSON (defaults for missing fields)");
  run->add_option("--out-dir", run_dir, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      const Truth truth = make_truth({parse_truth_kind(sim_truth), truth_seed, resolution});
      Rng rng = make_rng(sim_seed, kDataStream);
      const auto data = sample_truth(truth, static_cast<std::size_t>(sim_n), rng);
      with_output(sim_out, [&](std::ostream& o) { write_samples(o, data); });
      if (!sim_truth_out.empty()) {
        with_output(sim_truth_out, [&](std::ostream& o) { write_histogram_csv(o, truth.density); });
      }
    } else if (*fit_cmd) {
      std::ifstream in(fit_input);
      if (!in) throw std::runtime_error("cannot open '" + fit_input + "'");
      const auto data = read_samples(in);
      const ResolvedPrior prior = resolve_prior(fit_prior.config(), static_cast<std::int64_t>(data.size()));
      warn_if_clamped(prior);
      const FittedPosterior fp = fit_data(data, prior);
      with_output(fit_out, [&](std::ostream& o) { o << to_json(fp).dump(2) << '\n'; });
    } else if (*estimate) {
      const FittedPosterior fp = read_model(est_model);
      const MedianTree mt = median_tree(fp);
      const DyadicHistogram f = median_density(mt, fp.counts(), fp.n());
      with_output(est_out, [&](std::ostream& o) { write_histogram_csv(o, f); });
      if (!est_tree_out.empty()) {
        with_output(est_tree_out, [&](std::ostream& o) { o << to_json(mt.tree).dump() << '\n'; });
      }
      if (!est_cdf_out.empty()) {
        with_output(est_cdf_out, [&](std::ostream& o) { write_cdf_csv(o, median_cdf(f)); });
      }
    } else if (*band) {
      const FittedPosterior fp = read_model(band_model);
      const MedianTree mt = median_tree(fp);
      if (band_kind == "simple") {
        const SupNormBand b = band_simple(fp, mt, vn_exponent);
        with_output(band_out, [&](std::ostream& o) { write_band_csv(o, b); });
      } else {
        const auto draws = posterior_draws(fp, band_draws, band_seed);
        const MultiscaleBand b = band_multiscale(fp, mt, band_level, MultiscaleWeights{w_delta}, vn_exponent, draws);
        with_output(band_out, [&](std::ostream& o) { write_band_csv(o, b.simple()); });
        auto summary = multiscale_summary(b);
        summary["level"] = band_level;
        summary["draws"] = band_draws;
        summary["credibility"] = credibility(b, std::span<const DyadicHistogram>(draws));
        with_output(band_summary.empty() ? "-" : band_summary,
                    [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
      }
    } else if (*cdf) {
      const FittedPosterior fp = read_model(cdf_model);
      const auto draws = posterior_draws(fp, cdf_draws, cdf_seed);
      const CdfBand b = cdf_band(fp, median_tree(fp), cdf_level, draws);
      with_output(cdf_out, [&](std::ostream& o) { write_cdf_band_csv(o, b); });
    } else if (*table1) {
      t1.prior = t1_prior.config();
      const ResolvedPrior prior = resolve_prior(t1.prior, t1.n);
      warn_if_clamped(prior);
      nlohmann::json j;
      if (t1_reps == 1) {
        j = to_json(reproduce_table1(t1, t1_levels));
      } else {
        j = table1_replicated(t1, t1_levels, t1_reps);
      }
      j["config"] = to_json(t1);
      with_output(t1_out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    } else if (*rate) {
      const auto ns = parse_ns(rate_ns);
      const auto study =
          rate_study({parse_truth_kind(rate_truth), rate_truth_seed, 12}, ns, rate_reps, rate_seed, rate_prior.config());
      with_output(rate_out, [&](std::ostream& o) { write_rate_csv(o, study); });
    } else if (*run) {
      const ExperimentConfig config = run_config.empty() ? ExperimentConfig{} : config_from_json(read_json(run_config));
      const PipelineResult result = run_pipeline(config);
      warn_if_clamped(result.fit.prior);
      write_pipeline(result, run_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "optree: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
