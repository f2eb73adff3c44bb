#include "optree/truths.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace optree {

namespace {

constexpr std::uint64_t kBrownianStream = 0xB50;

double triangular(double x) { return x < 0.5 ? 0.5 + 2.0 * x : 1.5 - 2.0 * (x - 0.5); }

double sine(double x) { return 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * x); }

DyadicHistogram normalized_grid(int depth, std::vector<double> heights) {
  double total = 0.0;
  for (double h : heights) total += h;
  const double scale = static_cast<double>(heights.size()) / total;
  for (double& h : heights) h *= scale;
  return DyadicHistogram::from_grid(depth, heights);
}

}  // namespace

TruthKind parse_truth_kind(std::string_view name) {
  if (name == "triangular") return TruthKind::triangular;
  if (name == "exp_brownian" || name == "exp-brownian") return TruthKind::exp_brownian;
  if (name == "mixed") return TruthKind::mixed;
  if (name == "sine") return TruthKind::sine;
  throw std::invalid_argument("unknown truth '" + std::string(name) +
                              "' (expected triangular, exp_brownian, mixed or sine)");
}

std::string to_string(TruthKind kind) {
  switch (kind) {
    case TruthKind::triangular: return "triangular";
    case TruthKind::exp_brownian: return "exp_brownian";
    case TruthKind::mixed: return "mixed";
    case TruthKind::sine: return "sine";
  }
  return "unknown";
}

double Truth::operator()(double x) const {
  switch (spec.kind) {
    case TruthKind::triangular: return triangular(x);
    case TruthKind::sine: return sine(x);
    default: return density(x);
  }
}

std::vector<double> brownian_path(std::uint64_t seed, int resolution) {
  if (resolution < 0 || resolution > 16) throw std::invalid_argument("resolution must lie in [0,16]");
  Rng rng = make_rng(seed, kBrownianStream);
  std::normal_distribution<double> step(0.0, std::sqrt(std::ldexp(1.0, -resolution)));
  std::vector<double> w((std::size_t{1} << resolution) + 1, 0.0);
  for (std::size_t i = 1; i < w.size(); ++i) w[i] = w[i - 1] + step(rng);
  return w;
}

Truth make_truth(const TruthSpec& spec) {
  const int j = spec.resolution;
  if (j < 1 || j > 16) throw std::invalid_argument("truth resolution must lie in [1,16]");
  const std::size_t cells = std::size_t{1} << j;
  const double width = std::ldexp(1.0, -j);
  std::vector<double> heights(cells);

  DyadicHistogram density;
  switch (spec.kind) {
    case TruthKind::triangular:
      // Linear inside every cell (the kink sits on a cell boundary): average = midpoint value.
      for (std::size_t k = 0; k < cells; ++k) heights[k] = triangular((static_cast<double>(k) + 0.5) * width);
      density = DyadicHistogram::from_grid(j, heights);
      break;
    case TruthKind::sine: {
      const double two_pi = 2.0 * std::numbers::pi;
      for (std::size_t k = 0; k < cells; ++k) {
        const double a = static_cast<double>(k) * width;
        const double b = a + width;
        heights[k] = 1.0 + 0.5 * (std::cos(two_pi * a) - std::cos(two_pi * b)) / (two_pi * width);
      }
      density = DyadicHistogram::from_grid(j, heights);
      break;
    }
    case TruthKind::exp_brownian: {
      const auto w = brownian_path(spec.seed, j);
      for (std::size_t k = 0; k < cells; ++k) heights[k] = std::exp(w[k]);
      density = normalized_grid(j, std::move(heights));
      break;
    }
    case TruthKind::mixed: {
      // e^W on [0, 1/2), then held at c = e^{W_1/2} for continuity.
      const auto w = brownian_path(spec.seed, j);
      const double c = std::exp(w[cells / 2]);
      for (std::size_t k = 0; k < cells; ++k) heights[k] = k < cells / 2 ? std::exp(w[k]) : c;
      density = normalized_grid(j, std::move(heights));
      break;
    }
  }
  PiecewiseLinearCdf cdf = cdf_of(density);
  return Truth{spec, std::move(density), std::move(cdf)};
}

std::vector<double> sample_histogram(const DyadicHistogram& density, std::size_t n, Rng& rng) {
  const auto cells = density.cells();
  std::vector<double> cumulative(cells.size());
  double running = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].height < 0.0) throw std::invalid_argument("cannot sample a negative density");
    running += cells[i].mass();
    cumulative[i] = running;
  }
  if (!(running > 0.0)) throw std::invalid_argument("cannot sample a density with zero mass");

  const double below_one = std::nextafter(1.0, 0.0);
  std::vector<double> out(n);
  for (double& x : out) {
    const double u = uniform01(rng) * running;
    auto idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                        cumulative.begin());
    idx = std::min(idx, cells.size() - 1);
    // Skip zero-mass cells the search may land on at their boundary.
    while (cells[idx].height == 0.0 && idx + 1 < cells.size()) ++idx;
    const Interval iv = interval_of(cells[idx].node);
    const double before = idx == 0 ? 0.0 : cumulative[idx - 1];
    const double offset = cells[idx].height > 0.0 ? (u - before) / cells[idx].height : 0.0;
    x = std::clamp(iv.left + offset, iv.left, std::min(std::nextafter(iv.right, 0.0), below_one));
  }
  return out;
}

std::vector<double> sample_truth(const Truth& truth, std::size_t n, Rng& rng) {
  return sample_histogram(truth.density, n, rng);
}

}  // namespace optree
