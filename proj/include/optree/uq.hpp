#pragma once

// Credible bands around the median-tree estimator:
//   simple band      ||f - f_hat||_inf <= sigma_n
//   multiscale band  simple band  AND  sqrt(n) ||f - f_hat||_M0(w) <= R_n
//   CDF band         ||F - F_hat||_inf <= rho_n
// R_n and rho_n are posterior quantiles estimated from draws.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"

#include "optree/dyadic.hpp"
#include "optree/estimators.hpp"
#include "optree/posterior.hpp"

namespace optree {

inline constexpr double kDefaultVnExponent = 0.501;
inline constexpr double kDefaultWeightDelta = 0.5;

/// v_n sqrt(ln n / n) 2^(depth/2) with v_n = (ln n)^v_exponent. Requires n >= 3
/// unless called through the raw overload.
double sigma_n(const MedianTree& mt, std::int64_t n, double v_exponent = kDefaultVnExponent);
double sigma_n(int tree_depth, double n, double v_exponent = kDefaultVnExponent);

/// w_l = (l + 1)^(2 + delta); shifted by one so that w_0 > 0.
struct MultiscaleWeights {
  double delta = kDefaultWeightDelta;

  [[nodiscard]] double operator()(int level) const;
};

/// max over l < max_level, all k, of |<g - center, psi_lk>| / w_l.
double multiscale_distance(const DyadicHistogram& g, const DyadicHistogram& center,
                           const MultiscaleWeights& w, int max_level);

/// Per-level max_k |<g - center, psi_lk>| (unweighted), levels 0 .. max_level-1.
std::vector<double> multiscale_profile(const DyadicHistogram& g, const DyadicHistogram& center,
                                       int max_level);

/// Smallest sample value r with #{d <= r} >= (1 - gamma) * #d. Needs >= 100 values.
double quantile_radius(std::span<const double> distances, double gamma);

struct SetEvaluation {
  bool covered = false;
  double diameter = 0.0;
};

/// Closed sup-norm ball around a histogram.
class SupNormBand {
 public:
  SupNormBand(DyadicHistogram center, double radius);

  [[nodiscard]] const DyadicHistogram& center() const noexcept { return center_; }
  [[nodiscard]] double radius() const noexcept { return radius_; }
  [[nodiscard]] double distance(const DyadicHistogram& g) const { return sup_distance(g, center_); }
  [[nodiscard]] bool contains(const DyadicHistogram& g) const { return distance(g) <= radius_; }
  [[nodiscard]] double diameter() const noexcept { return 2.0 * radius_; }

 private:
  DyadicHistogram center_;
  double radius_;
};

/// Closed ball {g : sqrt(n) ||g - center||_M0(w) <= scaled_radius}.
class MultiscaleBall {
 public:
  MultiscaleBall(DyadicHistogram center, MultiscaleWeights weights, int max_level, std::int64_t n,
                 double scaled_radius);

  [[nodiscard]] const DyadicHistogram& center() const noexcept { return center_; }
  [[nodiscard]] const MultiscaleWeights& weights() const noexcept { return weights_; }
  [[nodiscard]] int max_level() const noexcept { return max_level_; }
  /// R_n; the ball radius in the M0 norm is R_n / sqrt(n).
  [[nodiscard]] double scaled_radius() const noexcept { return scaled_radius_; }
  /// sqrt(n) times the M0 distance, over every level where the difference can
  /// have nonzero coefficients (never fewer than max_level).
  [[nodiscard]] double scaled_distance(const DyadicHistogram& g) const;
  [[nodiscard]] bool contains(const DyadicHistogram& g) const { return scaled_distance(g) <= scaled_radius_; }

 private:
  DyadicHistogram center_;
  MultiscaleWeights weights_;
  int max_level_;
  double sqrt_n_;
  double scaled_radius_;
};

class MultiscaleBand {
 public:
  MultiscaleBand(SupNormBand simple, MultiscaleBall ball);

  [[nodiscard]] const SupNormBand& simple() const noexcept { return simple_; }
  [[nodiscard]] const MultiscaleBall& ball() const noexcept { return ball_; }
  [[nodiscard]] bool contains(const DyadicHistogram& g) const {
    return simple_.contains(g) && ball_.contains(g);
  }
  [[nodiscard]] double diameter() const noexcept { return simple_.diameter(); }

 private:
  SupNormBand simple_;
  MultiscaleBall ball_;
};

class CdfBand {
 public:
  CdfBand(PiecewiseLinearCdf center, double radius);

  [[nodiscard]] const PiecewiseLinearCdf& center() const noexcept { return center_; }
  [[nodiscard]] double radius() const noexcept { return radius_; }
  [[nodiscard]] double distance(const PiecewiseLinearCdf& g) const { return sup_distance(g, center_); }
  [[nodiscard]] bool contains(const PiecewiseLinearCdf& g) const { return distance(g) <= radius_; }
  [[nodiscard]] bool contains(const DyadicHistogram& density) const { return contains(cdf_of(density)); }
  [[nodiscard]] double diameter() const noexcept { return 2.0 * radius_; }

 private:
  PiecewiseLinearCdf center_;
  double radius_;
};

SupNormBand band_simple(const FittedPosterior& fp, const MedianTree& mt,
                        double v_exponent = kDefaultVnExponent);

MultiscaleBand band_multiscale(const FittedPosterior& fp, const MedianTree& mt, double gamma,
                               const MultiscaleWeights& w, double v_exponent,
                               std::span<const DyadicHistogram> draws);

CdfBand cdf_band(const FittedPosterior& fp, const MedianTree& mt, double gamma,
                 std::span<const DyadicHistogram> draws);

/// Fraction of draws inside the set.
template <class Band>
double credibility(const Band& band, std::span<const DyadicHistogram> draws) {
  std::size_t inside = 0;
  for (const auto& d : draws) inside += band.contains(d) ? 1 : 0;
  return draws.empty() ? 0.0 : static_cast<double>(inside) / static_cast<double>(draws.size());
}

SetEvaluation evaluate_set(const SupNormBand& band, const DyadicHistogram& truth);
SetEvaluation evaluate_set(const MultiscaleBand& band, const DyadicHistogram& truth);
SetEvaluation evaluate_set(const CdfBand& band, const PiecewiseLinearCdf& truth);

/// left,right,center_height,lower,upper on the center's cells.
void write_band_csv(std::ostream& out, const SupNormBand& band);
/// t,F,lower,upper at the center's breakpoints.
void write_cdf_band_csv(std::ostream& out, const CdfBand& band);
/// R_n, sigma_n, weights and the per-level max-coefficient profile of the center.
nlohmann::json multiscale_summary(const MultiscaleBand& band);

}  // namespace optree
