#pragma once

// Ground-truth densities for simulation studies, stored as fine dyadic
// histograms so that band membership of the truth is decided exactly.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "optree/dyadic.hpp"
#include "optree/random.hpp"

namespace optree {

enum class TruthKind { triangular, exp_brownian, mixed, sine };

TruthKind parse_truth_kind(std::string_view name);
std::string to_string(TruthKind kind);

struct TruthSpec {
  TruthKind kind = TruthKind::triangular;
  std::uint64_t seed = 1;  // Brownian path; ignored by the deterministic kinds
  int resolution = 12;     // truth is a histogram on 2^resolution cells
};

struct Truth {
  TruthSpec spec;
  DyadicHistogram density;
  PiecewiseLinearCdf cdf;

  /// Pointwise value: closed form for triangular and sine, cell value otherwise.
  [[nodiscard]] double operator()(double x) const;
};

/// Throws std::invalid_argument for resolution outside [1, 16].
Truth make_truth(const TruthSpec& spec);

/// W at t = i 2^-resolution for i = 0 .. 2^resolution; W_0 = 0.
std::vector<double> brownian_path(std::uint64_t seed, int resolution);

/// n i.i.d. draws by inverting the piecewise-linear CDF; all in [0,1).
std::vector<double> sample_histogram(const DyadicHistogram& density, std::size_t n, Rng& rng);
std::vector<double> sample_truth(const Truth& truth, std::size_t n, Rng& rng);

}  // namespace optree
