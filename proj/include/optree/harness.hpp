#pragma once

// Experiment orchestration: simulate -> count -> fit -> median tree -> bands,
// plus the replication studies. Every artifact is a pure function of the
// configuration and its master seed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "optree/estimators.hpp"
#include "optree/posterior.hpp"
#include "optree/truths.hpp"
#include "optree/uq.hpp"

namespace optree {

struct PriorConfig {
  double gamma_split = 1.1;
  double beta_a = 1.0;
  std::optional<int> flat_level;  // default ceil(sqrt(ln n))
  std::optional<int> max_depth;   // default floor(log2(n / ln^2 n)), at least flat_level + 1
};

struct ResolvedPrior {
  GWParams params;
  double beta_a = 1.0;
  bool depth_clamped = false;
};

ResolvedPrior resolve_prior(const PriorConfig& prior, std::int64_t n);
FittedPosterior fit_data(std::span<const double> data, const ResolvedPrior& prior);

struct ExperimentConfig {
  TruthSpec truth;
  std::int64_t n = 10000;
  std::uint64_t seed = 20240601;
  PriorConfig prior;
  std::size_t draws = 10000;
  double level = 0.05;  // gamma: target credibility 1 - level
  double v_exponent = kDefaultVnExponent;
  double w_delta = kDefaultWeightDelta;
  std::size_t replications = 50;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Seed streams under a master seed.
inline constexpr std::uint64_t kDataStream = 1;
inline constexpr std::uint64_t kCalibrationStream = 2;
inline constexpr std::uint64_t kFreshDrawStream = 3;
inline constexpr std::uint64_t kReplicationStream = 1'000'000;

/// One simulated dataset and everything fitted from it.
struct ReplicationFit {
  std::vector<double> data;
  ResolvedPrior prior;
  FittedPosterior posterior;
  MedianTree median;
  DyadicHistogram estimate;
};

/// Data from make_rng(seed, kDataStream).
ReplicationFit fit_replication(const Truth& truth, std::int64_t n, std::uint64_t seed,
                               const PriorConfig& prior);

struct PipelineResult {
  ExperimentConfig config;
  Truth truth;
  ReplicationFit fit;
  SupNormBand simple;
  MultiscaleBand multiscale;
  CdfBand cdf;
  SetEvaluation simple_eval;
  SetEvaluation multiscale_eval;
  SetEvaluation cdf_eval;
  nlohmann::json manifest;
};

PipelineResult run_pipeline(const ExperimentConfig& config);
/// Writes data, model, median tree, estimate, bands, truth and manifest.json into dir.
void write_pipeline(const PipelineResult& result, const std::filesystem::path& dir);

struct Table1Row {
  double level = 0.0;
  double linf = 0.0;          // sup-norm quantile band C^Linf
  double ball = 0.0;          // multiscale ball
  double multiscale_band = 0.0;  // simple band intersected with the ball
  double intersection = 0.0;  // C^Linf and ball
  double product = 0.0;       // linf * ball
  double se_linf = 0.0;
  double se_ball = 0.0;
  double se_intersection = 0.0;
  double linf_radius = 0.0;
  double ball_radius = 0.0;   // R_n
  double calibration_linf = 0.0;  // fraction of calibration draws inside
  double calibration_ball = 0.0;
};

struct Table1Report {
  std::int64_t n = 0;
  std::size_t draws = 0;
  int median_depth = 0;
  double simple_band_credibility = 0.0;
  std::vector<Table1Row> rows;
};

/// Radii calibrated on one set of draws, credibilities measured on a fresh set.
Table1Report reproduce_table1(const ExperimentConfig& config, std::span<const double> levels);
nlohmann::json to_json(const Table1Report& report);

struct RateRow {
  std::int64_t n = 0;
  double median_error = 0.0;  // sup-norm error of the median-tree estimator
  double median_depth = 0.0;  // depth of the median tree
};

struct RateStudy {
  TruthKind truth = TruthKind::triangular;
  std::vector<RateRow> rows;
  double slope = 0.0;  // least-squares slope of log(error) on log(n)
};

RateStudy rate_study(const TruthSpec& truth, std::span<const std::int64_t> ns, std::size_t replications,
                     std::uint64_t seed, const PriorConfig& prior = {});
void write_rate_csv(std::ostream& out, const RateStudy& study);

struct ReplicationOutcome {
  bool simple_covered = false;
  bool multiscale_covered = false;
  bool cdf_covered = false;
  double simple_radius = 0.0;
  double cdf_radius = 0.0;
  int median_depth = 0;
  std::size_t median_interior = 0;
};

/// config.replications datasets from config.truth; bands use config.draws draws each.
std::vector<ReplicationOutcome> coverage_study(const ExperimentConfig& config);

/// Interior-node counts of the median tree over replications (no posterior draws).
std::vector<std::size_t> median_tree_sizes(const TruthSpec& truth, std::int64_t n,
                                           std::size_t replications, std::uint64_t seed,
                                           const PriorConfig& prior = {});

}  // namespace optree
