#pragma once

// Dyadic index arithmetic, count tables, piecewise-constant densities on
// dyadic partitions of [0,1) and their Haar analysis.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace optree {

// Dyadic endpoints k/2^l are exact in double precision up to this level.
inline constexpr int kMaxLevel = 52;

/// Node (l,k) of the complete dyadic tree, addressing I_lk = [k/2^l, (k+1)/2^l).
/// Ordering is (level, pos), the canonical serialization order.
struct NodeIndex {
  int level = 0;
  std::int64_t pos = 0;

  [[nodiscard]] constexpr bool valid() const noexcept {
    return level >= 0 && level <= kMaxLevel && pos >= 0 &&
           pos < (std::int64_t{1} << level);
  }
  [[nodiscard]] constexpr bool is_root() const noexcept { return level == 0; }
  [[nodiscard]] constexpr NodeIndex parent() const noexcept { return {level - 1, pos / 2}; }
  [[nodiscard]] constexpr NodeIndex left() const noexcept { return {level + 1, 2 * pos}; }
  [[nodiscard]] constexpr NodeIndex right() const noexcept { return {level + 1, 2 * pos + 1}; }
  [[nodiscard]] constexpr NodeIndex sibling() const noexcept { return {level, pos ^ 1}; }

  friend constexpr auto operator<=>(const NodeIndex&, const NodeIndex&) = default;
};

/// Checked constructor; throws std::invalid_argument unless 0 <= pos < 2^level.
NodeIndex make_node(int level, std::int64_t pos);

/// Binary string eps_1...eps_l with pos = sum eps_i 2^(l-i); the root is "".
std::string eps_of(NodeIndex node);
NodeIndex node_of_eps(std::string_view eps);

struct Interval {
  double left = 0.0;
  double right = 1.0;
  [[nodiscard]] double width() const noexcept { return right - left; }
  [[nodiscard]] bool contains(double x) const noexcept { return left <= x && x < right; }
};

Interval interval_of(NodeIndex node);

/// Position of a node in level-order storage of the complete tree.
[[nodiscard]] constexpr std::size_t heap_index(NodeIndex node) noexcept {
  return (std::size_t{1} << node.level) - 1 + static_cast<std::size_t>(node.pos);
}

/// Dense per-node storage for every node of the complete tree down to max_depth.
template <class T>
class NodeArray {
 public:
  NodeArray() : NodeArray(0) {}
  explicit NodeArray(int max_depth, T fill = T{})
      : max_depth_(max_depth), values_((std::size_t{2} << max_depth) - 1, fill) {}

  [[nodiscard]] int max_depth() const noexcept { return max_depth_; }
  [[nodiscard]] bool covers(NodeIndex node) const noexcept {
    return node.valid() && node.level <= max_depth_;
  }

  T& operator[](NodeIndex node) { return values_[heap_index(node)]; }
  const T& operator[](NodeIndex node) const { return values_[heap_index(node)]; }

  [[nodiscard]] std::span<T> level(int l) {
    return {values_.data() + ((std::size_t{1} << l) - 1), std::size_t{1} << l};
  }
  [[nodiscard]] std::span<const T> level(int l) const {
    return {values_.data() + ((std::size_t{1} << l) - 1), std::size_t{1} << l};
  }

  friend bool operator==(const NodeArray&, const NodeArray&) = default;

 private:
  int max_depth_;
  std::vector<T> values_;
};

/// N_X(I_lk) for every node down to max_depth. Additive down the tree.
class CountTable {
 public:
  CountTable() = default;

  /// Builds all coarser levels by summing children. Throws on negative counts.
  static CountTable from_finest_level(int max_depth, std::span<const std::int64_t> finest);
  /// Validates additivity and nonnegativity of a full per-level table.
  static CountTable from_levels(const std::vector<std::vector<std::int64_t>>& levels);

  [[nodiscard]] int max_depth() const noexcept { return counts_.max_depth(); }
  [[nodiscard]] std::int64_t n() const noexcept { return counts_[NodeIndex{}]; }
  [[nodiscard]] std::int64_t operator[](NodeIndex node) const;
  [[nodiscard]] std::span<const std::int64_t> level(int l) const { return counts_.level(l); }

 private:
  NodeArray<std::int64_t> counts_;
};

/// Counts of data in every dyadic cell. Throws std::invalid_argument for data
/// outside [0,1) (including 1.0 and NaN) or a negative/oversized depth.
CountTable build_counts(std::span<const double> data, int max_depth);

struct HistogramCell {
  NodeIndex node;
  double height = 0.0;  // density per unit length, not cell mass

  [[nodiscard]] double mass() const noexcept;
};

/// Piecewise-constant function on a dyadic partition of [0,1).
/// Cells are kept sorted by left endpoint.
class DyadicHistogram {
 public:
  /// The uniform density.
  DyadicHistogram();
  /// Throws std::invalid_argument unless the cells partition [0,1) exactly.
  explicit DyadicHistogram(std::vector<HistogramCell> cells);

  static DyadicHistogram constant(double height);
  static DyadicHistogram from_grid(int depth, std::span<const double> heights);

  [[nodiscard]] std::span<const HistogramCell> cells() const noexcept { return cells_; }
  [[nodiscard]] int depth() const noexcept { return depth_; }
  [[nodiscard]] double total_mass() const noexcept;
  [[nodiscard]] bool is_density(double tol = 1e-12) const noexcept;
  [[nodiscard]] double operator()(double x) const;
  /// Integral of the histogram over [a,b), a <= b inside [0,1].
  [[nodiscard]] double mass(double a, double b) const;

  /// Heights / masses on the uniform grid of 2^depth cells; depth >= this->depth().
  [[nodiscard]] std::vector<double> grid_heights(int depth) const;
  [[nodiscard]] std::vector<double> grid_masses(int depth) const;

  friend bool operator==(const DyadicHistogram&, const DyadicHistogram&);

 private:
  std::vector<HistogramCell> cells_;
  int depth_ = 0;
};

/// <h, psi_lk> with psi_lk = 2^(l/2) (1_right - 1_left) on I_lk, by exact integration.
double haar_coefficient(const DyadicHistogram& h, NodeIndex node);

/// All coefficients at levels 0 .. levels-1, indexed [l][k].
std::vector<std::vector<double>> haar_coefficients(const DyadicHistogram& h, int levels);

/// Same, from cell masses on a uniform grid of 2^depth cells (depth >= levels).
std::vector<std::vector<double>> haar_coefficients_from_masses(std::span<const double> masses,
                                                               int levels);

/// Inverse of haar_coefficients: mean * 1 + sum_lk c_lk psi_lk as a depth-levels grid histogram.
DyadicHistogram haar_synthesis(double mean, const std::vector<std::vector<double>>& coefficients);

/// Exact sup-norm distance, walking the common refinement of both partitions.
double sup_distance(const DyadicHistogram& a, const DyadicHistogram& b);

/// Continuous piecewise-linear function given by its values at sorted breakpoints.
class PiecewiseLinearCdf {
 public:
  PiecewiseLinearCdf(std::vector<double> breaks, std::vector<double> values);

  [[nodiscard]] double operator()(double t) const;
  [[nodiscard]] std::span<const double> breaks() const noexcept { return breaks_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

/// t -> integral_0^t h, with breakpoints at the cell boundaries.
PiecewiseLinearCdf cdf_of(const DyadicHistogram& h);

/// Exact: the difference is linear between points of the union of breakpoints.
double sup_distance(const PiecewiseLinearCdf& a, const PiecewiseLinearCdf& b);

// Text formats.
std::vector<double> read_samples(std::istream& in);
void write_samples(std::ostream& out, std::span<const double> data);
void write_histogram_csv(std::ostream& out, const DyadicHistogram& h);
void write_cdf_csv(std::ostream& out, const PiecewiseLinearCdf& cdf);

}  // namespace optree
