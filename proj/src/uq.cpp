#include "optree/uq.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace optree {

namespace {

constexpr std::size_t kMinQuantileDraws = 100;

std::vector<double> difference_masses(const DyadicHistogram& g, const DyadicHistogram& center, int depth) {
  std::vector<double> diff = g.grid_masses(depth);
  const std::vector<double> c = center.grid_masses(depth);
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= c[i];
  return diff;
}

}  // namespace

double sigma_n(int tree_depth, double n, double v_exponent) {
  if (!(n > 1.0)) throw std::domain_error("sigma_n needs n > 1");
  const double ln = std::log(n);
  return std::pow(ln, v_exponent) * std::sqrt(ln / n) * std::sqrt(std::ldexp(1.0, tree_depth));
}

double sigma_n(const MedianTree& mt, std::int64_t n, double v_exponent) {
  if (n < 3) throw std::domain_error("sigma_n needs n >= 3");
  return sigma_n(mt.depth(), static_cast<double>(n), v_exponent);
}

double MultiscaleWeights::operator()(int level) const {
  if (!(delta > 0.0)) throw std::domain_error("multiscale weight exponent delta must be positive");
  return std::pow(static_cast<double>(level) + 1.0, 2.0 + delta);
}

std::vector<double> multiscale_profile(const DyadicHistogram& g, const DyadicHistogram& center,
                                       int max_level) {
  if (max_level < 0) throw std::invalid_argument("max_level must be nonnegative");
  const int depth = std::max({max_level, g.depth(), center.depth()});
  const auto coeffs = haar_coefficients_from_masses(difference_masses(g, center, depth), max_level);
  std::vector<double> profile(coeffs.size(), 0.0);
  for (std::size_t l = 0; l < coeffs.size(); ++l) {
    for (double c : coeffs[l]) profile[l] = std::max(profile[l], std::abs(c));
  }
  return profile;
}

double multiscale_distance(const DyadicHistogram& g, const DyadicHistogram& center,
                           const MultiscaleWeights& w, int max_level) {
  const auto profile = multiscale_profile(g, center, max_level);
  double best = 0.0;
  for (std::size_t l = 0; l < profile.size(); ++l) best = std::max(best, profile[l] / w(static_cast<int>(l)));
  return best;
}

double quantile_radius(std::span<const double> distances, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("gamma must lie in (0,1)");
  if (distances.size() < kMinQuantileDraws) {
    throw std::invalid_argument("quantile radius needs at least 100 draws");
  }
  std::vector<double> sorted(distances.begin(), distances.end());
  const auto m = static_cast<double>(sorted.size());
  // Smallest rank i with i / m >= 1 - gamma; the shrink absorbs representation error
  // in (1 - gamma) * m for round products such as 0.95 * 100.
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - gamma) * m * (1.0 - 1e-12)));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  return sorted[rank - 1];
}

// --- Bands ------------------------------------------------------------------

SupNormBand::SupNormBand(DyadicHistogram center, double radius) : center_(std::move(center)), radius_(radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("band radius must be nonnegative");
}

MultiscaleBall::MultiscaleBall(DyadicHistogram center, MultiscaleWeights weights, int max_level,
                               std::int64_t n, double scaled_radius)
    : center_(std::move(center)),
      weights_(weights),
      max_level_(max_level),
      sqrt_n_(std::sqrt(static_cast<double>(n))),
      scaled_radius_(scaled_radius) {
  if (!(scaled_radius >= 0.0)) throw std::invalid_argument("ball radius must be nonnegative");
  if (n < 1) throw std::invalid_argument("multiscale ball needs n >= 1");
  if (!(weights.delta > 0.0)) throw std::invalid_argument("multiscale weight exponent delta must be positive");
}

double MultiscaleBall::scaled_distance(const DyadicHistogram& g) const {
  const int levels = std::max({max_level_, g.depth(), center_.depth()});
  return sqrt_n_ * multiscale_distance(g, center_, weights_, levels);
}

MultiscaleBand::MultiscaleBand(SupNormBand simple, MultiscaleBall ball)
    : simple_(std::move(simple)), ball_(std::move(ball)) {}

CdfBand::CdfBand(PiecewiseLinearCdf center, double radius) : center_(std::move(center)), radius_(radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("band radius must be nonnegative");
}

SupNormBand band_simple(const FittedPosterior& fp, const MedianTree& mt, double v_exponent) {
  return SupNormBand(median_density(mt, fp.counts(), fp.n()), sigma_n(mt, fp.n(), v_exponent));
}

MultiscaleBand band_multiscale(const FittedPosterior& fp, const MedianTree& mt, double gamma,
                               const MultiscaleWeights& w, double v_exponent,
                               std::span<const DyadicHistogram> draws) {
  SupNormBand simple = band_simple(fp, mt, v_exponent);
  const MultiscaleBall probe(simple.center(), w, fp.max_depth(), fp.n(), 0.0);
  std::vector<double> distances(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) distances[i] = probe.scaled_distance(draws[i]);
  MultiscaleBall ball(simple.center(), w, fp.max_depth(), fp.n(), quantile_radius(distances, gamma));
  return MultiscaleBand(std::move(simple), std::move(ball));
}

CdfBand cdf_band(const FittedPosterior& fp, const MedianTree& mt, double gamma,
                 std::span<const DyadicHistogram> draws) {
  PiecewiseLinearCdf center = median_cdf(median_density(mt, fp.counts(), fp.n()));
  std::vector<double> distances(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) distances[i] = sup_distance(cdf_of(draws[i]), center);
  const double radius = quantile_radius(distances, gamma);
  return CdfBand(std::move(center), radius);
}

SetEvaluation evaluate_set(const SupNormBand& band, const DyadicHistogram& truth) {
  return {band.contains(truth), band.diameter()};
}

SetEvaluation evaluate_set(const MultiscaleBand& band, const DyadicHistogram& truth) {
  return {band.contains(truth), band.diameter()};
}

SetEvaluation evaluate_set(const CdfBand& band, const PiecewiseLinearCdf& truth) {
  return {band.contains(truth), band.diameter()};
}

// --- Exports ----------------------------------------------------------------

void write_band_csv(std::ostream& out, const SupNormBand& band) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "left,right,center_height,lower,upper\n";
  for (const auto& c : band.center().cells()) {
    const Interval iv = interval_of(c.node);
    out << iv.left << ',' << iv.right << ',' << c.height << ',' << c.height - band.radius() << ','
        << c.height + band.radius() << '\n';
  }
}

void write_cdf_band_csv(std::ostream& out, const CdfBand& band) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "t,F,lower,upper\n";
  const auto& center = band.center();
  for (std::size_t i = 0; i < center.breaks().size(); ++i) {
    const double f = center.values()[i];
    out << center.breaks()[i] << ',' << f << ',' << f - band.radius() << ',' << f + band.radius() << '\n';
  }
}

nlohmann::json multiscale_summary(const MultiscaleBand& band) {
  const auto& ball = band.ball();
  const auto profile = multiscale_profile(ball.center(), DyadicHistogram(), ball.max_level());
  nlohmann::json j;
  j["scaled_radius"] = ball.scaled_radius();
  j["sigma_n"] = band.simple().radius();
  j["weight_delta"] = ball.weights().delta;
  j["max_level"] = ball.max_level();
  auto levels = nlohmann::json::array();
  for (std::size_t l = 0; l < profile.size(); ++l) {
    const int level = static_cast<int>(l);
    levels.push_back({{"level", level},
                      {"weight", ball.weights()(level)},
                      {"center_max_abs_coefficient", profile[l]},
                      {"weighted_center_max", profile[l] / ball.weights()(level)}});
  }
  j["profile"] = std::move(levels);
  return j;
}

}  // namespace optree
