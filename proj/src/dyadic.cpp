#include "optree/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace optree {

namespace {

// Practical ceiling on dense per-node storage (2^(d+1) entries).
constexpr int kMaxStoredDepth = 30;

double dyadic(std::int64_t k, int l) { return std::ldexp(static_cast<double>(k), -l); }

}  // namespace

NodeIndex make_node(int level, std::int64_t pos) {
  NodeIndex node{level, pos};
  if (!node.valid()) {
    throw std::invalid_argument("invalid dyadic node (" + std::to_string(level) + "," +
                                std::to_string(pos) + ")");
  }
  return node;
}

std::string eps_of(NodeIndex node) {
  std::string eps(static_cast<std::size_t>(node.level), '0');
  for (int i = 0; i < node.level; ++i) {
    if ((node.pos >> (node.level - 1 - i)) & 1) eps[static_cast<std::size_t>(i)] = '1';
  }
  return eps;
}

NodeIndex node_of_eps(std::string_view eps) {
  if (eps.size() > static_cast<std::size_t>(kMaxLevel)) {
    throw std::invalid_argument("binary address longer than supported depth");
  }
  NodeIndex node{static_cast<int>(eps.size()), 0};
  for (char c : eps) {
    if (c != '0' && c != '1') throw std::invalid_argument("binary address must contain only 0/1");
    node.pos = 2 * node.pos + (c - '0');
  }
  return node;
}

Interval interval_of(NodeIndex node) {
  return {dyadic(node.pos, node.level), dyadic(node.pos + 1, node.level)};
}

// --- CountTable -------------------------------------------------------------

CountTable CountTable::from_finest_level(int max_depth, std::span<const std::int64_t> finest) {
  if (max_depth < 0 || max_depth > kMaxStoredDepth) {
    throw std::invalid_argument("count table depth out of range");
  }
  if (finest.size() != (std::size_t{1} << max_depth)) {
    throw std::invalid_argument("finest level must have 2^max_depth entries");
  }
  CountTable table;
  table.counts_ = NodeArray<std::int64_t>(max_depth);
  auto bottom = table.counts_.level(max_depth);
  for (std::size_t k = 0; k < finest.size(); ++k) {
    if (finest[k] < 0) throw std::invalid_argument("negative count");
    bottom[k] = finest[k];
  }
  for (int l = max_depth - 1; l >= 0; --l) {
    auto parent = table.counts_.level(l);
    auto child = table.counts_.level(l + 1);
    for (std::size_t k = 0; k < parent.size(); ++k) parent[k] = child[2 * k] + child[2 * k + 1];
  }
  return table;
}

CountTable CountTable::from_levels(const std::vector<std::vector<std::int64_t>>& levels) {
  if (levels.empty()) throw std::invalid_argument("count table needs at least the root level");
  const int depth = static_cast<int>(levels.size()) - 1;
  CountTable table = from_finest_level(depth, levels.back());
  for (int l = 0; l < depth; ++l) {
    auto expected = table.level(l);
    if (!std::equal(expected.begin(), expected.end(), levels[static_cast<std::size_t>(l)].begin(),
                    levels[static_cast<std::size_t>(l)].end())) {
      throw std::invalid_argument("count table violates additivity at level " + std::to_string(l));
    }
  }
  return table;
}

std::int64_t CountTable::operator[](NodeIndex node) const {
  if (!counts_.covers(node)) {
    throw std::out_of_range("node below count table depth: (" + std::to_string(node.level) +
                            "," + std::to_string(node.pos) + ")");
  }
  return counts_[node];
}

CountTable build_counts(std::span<const double> data, int max_depth) {
  if (max_depth < 0 || max_depth > kMaxStoredDepth) {
    throw std::invalid_argument("count table depth out of range");
  }
  std::vector<std::int64_t> finest(std::size_t{1} << max_depth, 0);
  for (double x : data) {
    if (!(x >= 0.0 && x < 1.0)) {
      std::ostringstream msg;
      msg << "sample " << std::setprecision(17) << x << " outside [0,1)";
      throw std::invalid_argument(msg.str());
    }
    // Scaling by 2^L is exact, so floor gives the containing half-open cell.
    ++finest[static_cast<std::size_t>(std::floor(std::ldexp(x, max_depth)))];
  }
  return CountTable::from_finest_level(max_depth, finest);
}

// --- DyadicHistogram --------------------------------------------------------

double HistogramCell::mass() const noexcept { return std::ldexp(height, -node.level); }

DyadicHistogram::DyadicHistogram() : cells_{{NodeIndex{}, 1.0}} {}

DyadicHistogram::DyadicHistogram(std::vector<HistogramCell> cells) : cells_(std::move(cells)) {
  if (cells_.empty()) throw std::invalid_argument("histogram needs at least one cell");
  for (const auto& c : cells_) {
    if (!c.node.valid()) throw std::invalid_argument("histogram cell has invalid node");
    if (!std::isfinite(c.height)) throw std::invalid_argument("histogram height not finite");
  }
  std::sort(cells_.begin(), cells_.end(), [](const HistogramCell& a, const HistogramCell& b) {
    return interval_of(a.node).left < interval_of(b.node).left;
  });
  double edge = 0.0;
  for (const auto& c : cells_) {
    const Interval iv = interval_of(c.node);
    if (iv.left != edge) throw std::invalid_argument("histogram cells do not partition [0,1)");
    edge = iv.right;
    depth_ = std::max(depth_, c.node.level);
  }
  if (edge != 1.0) throw std::invalid_argument("histogram cells do not cover [0,1)");
}

DyadicHistogram DyadicHistogram::constant(double height) {
  return DyadicHistogram(std::vector<HistogramCell>{{NodeIndex{}, height}});
}

DyadicHistogram DyadicHistogram::from_grid(int depth, std::span<const double> heights) {
  if (depth < 0 || depth > kMaxStoredDepth || heights.size() != (std::size_t{1} << depth)) {
    throw std::invalid_argument("grid histogram needs 2^depth heights");
  }
  std::vector<HistogramCell> cells(heights.size());
  for (std::size_t k = 0; k < heights.size(); ++k) {
    cells[k] = {NodeIndex{depth, static_cast<std::int64_t>(k)}, heights[k]};
  }
  return DyadicHistogram(std::move(cells));
}

double DyadicHistogram::total_mass() const noexcept {
  double total = 0.0;
  for (const auto& c : cells_) total += c.mass();
  return total;
}

bool DyadicHistogram::is_density(double tol) const noexcept {
  return std::abs(total_mass() - 1.0) <= tol;
}

double DyadicHistogram::operator()(double x) const {
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("histogram evaluated outside [0,1)");
  auto it = std::upper_bound(cells_.begin(), cells_.end(), x, [](double v, const HistogramCell& c) {
    return v < interval_of(c.node).left;
  });
  return std::prev(it)->height;
}

double DyadicHistogram::mass(double a, double b) const {
  if (!(0.0 <= a && a <= b && b <= 1.0)) throw std::domain_error("mass interval outside [0,1]");
  double total = 0.0;
  auto it = std::upper_bound(cells_.begin(), cells_.end(), a, [](double v, const HistogramCell& c) {
    return v < interval_of(c.node).left;
  });
  for (it = std::prev(it); it != cells_.end(); ++it) {
    const Interval iv = interval_of(it->node);
    if (iv.left >= b) break;
    total += it->height * (std::min(b, iv.right) - std::max(a, iv.left));
  }
  return total;
}

std::vector<double> DyadicHistogram::grid_heights(int depth) const {
  if (depth < depth_ || depth > kMaxStoredDepth) {
    throw std::invalid_argument("grid depth must be at least the histogram depth");
  }
  std::vector<double> grid(std::size_t{1} << depth);
  auto out = grid.begin();
  for (const auto& c : cells_) out = std::fill_n(out, std::size_t{1} << (depth - c.node.level), c.height);
  return grid;
}

std::vector<double> DyadicHistogram::grid_masses(int depth) const {
  std::vector<double> grid = grid_heights(depth);
  for (double& v : grid) v = std::ldexp(v, -depth);
  return grid;
}

bool operator==(const DyadicHistogram& a, const DyadicHistogram& b) {
  return std::equal(a.cells_.begin(), a.cells_.end(), b.cells_.begin(), b.cells_.end(),
                    [](const HistogramCell& x, const HistogramCell& y) {
                      return x.node == y.node && x.height == y.height;
                    });
}

// --- Haar analysis ----------------------------------------------------------

double haar_coefficient(const DyadicHistogram& h, NodeIndex node) {
  if (!node.valid()) throw std::invalid_argument("invalid node");
  const Interval iv = interval_of(node);
  const double mid = 0.5 * (iv.left + iv.right);
  return std::sqrt(std::ldexp(1.0, node.level)) * (h.mass(mid, iv.right) - h.mass(iv.left, mid));
}

std::vector<std::vector<double>> haar_coefficients_from_masses(std::span<const double> masses,
                                                               int levels) {
  int depth = 0;
  while ((std::size_t{1} << depth) < masses.size()) ++depth;
  if ((std::size_t{1} << depth) != masses.size() || levels > depth || levels < 0) {
    throw std::invalid_argument("mass grid must have 2^depth cells with depth >= levels");
  }
  std::vector<double> current(masses.begin(), masses.end());
  // Pair-sum up the pyramid to level `levels`, then emit coefficients level by level.
  for (int l = depth; l > levels; --l) {
    for (std::size_t k = 0; k < current.size() / 2; ++k) current[k] = current[2 * k] + current[2 * k + 1];
    current.resize(current.size() / 2);
  }
  std::vector<std::vector<double>> coeffs(static_cast<std::size_t>(levels));
  for (int l = levels - 1; l >= 0; --l) {
    const double scale = std::sqrt(std::ldexp(1.0, l));
    auto& row = coeffs[static_cast<std::size_t>(l)];
    row.resize(std::size_t{1} << l);
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] = scale * (current[2 * k + 1] - current[2 * k]);
      current[k] = current[2 * k] + current[2 * k + 1];
    }
    current.resize(row.size());
  }
  return coeffs;
}

std::vector<std::vector<double>> haar_coefficients(const DyadicHistogram& h, int levels) {
  return haar_coefficients_from_masses(h.grid_masses(std::max(levels, h.depth())), levels);
}

DyadicHistogram haar_synthesis(double mean, const std::vector<std::vector<double>>& coefficients) {
  const int depth = static_cast<int>(coefficients.size());
  std::vector<double> heights{mean};
  for (int l = 0; l < depth; ++l) {
    const auto& row = coefficients[static_cast<std::size_t>(l)];
    if (row.size() != (std::size_t{1} << l)) throw std::invalid_argument("ragged coefficient table");
    const double amp = std::sqrt(std::ldexp(1.0, l));
    std::vector<double> next(2 * heights.size());
    for (std::size_t k = 0; k < heights.size(); ++k) {
      next[2 * k] = heights[k] - amp * row[k];
      next[2 * k + 1] = heights[k] + amp * row[k];
    }
    heights = std::move(next);
  }
  return DyadicHistogram::from_grid(depth, heights);
}

double sup_distance(const DyadicHistogram& a, const DyadicHistogram& b) {
  const auto ca = a.cells();
  const auto cb = b.cells();
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < ca.size() && j < cb.size()) {
    best = std::max(best, std::abs(ca[i].height - cb[j].height));
    const double ra = interval_of(ca[i].node).right;
    const double rb = interval_of(cb[j].node).right;
    if (ra <= rb) ++i;
    if (rb <= ra) ++j;
  }
  return best;
}

// --- CDFs -------------------------------------------------------------------

PiecewiseLinearCdf::PiecewiseLinearCdf(std::vector<double> breaks, std::vector<double> values)
    : breaks_(std::move(breaks)), values_(std::move(values)) {
  if (breaks_.size() < 2 || breaks_.size() != values_.size()) {
    throw std::invalid_argument("piecewise-linear function needs matching breakpoints and values");
  }
  if (!std::is_sorted(breaks_.begin(), breaks_.end()) ||
      std::adjacent_find(breaks_.begin(), breaks_.end()) != breaks_.end()) {
    throw std::invalid_argument("breakpoints must be strictly increasing");
  }
}

double PiecewiseLinearCdf::operator()(double t) const {
  if (t <= breaks_.front()) return values_.front();
  if (t >= breaks_.back()) return values_.back();
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(breaks_.begin(), breaks_.end(), t) - breaks_.begin());
  const std::size_t lo = hi - 1;
  if (t == breaks_[lo]) return values_[lo];
  const double w = (t - breaks_[lo]) / (breaks_[hi] - breaks_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

PiecewiseLinearCdf cdf_of(const DyadicHistogram& h) {
  std::vector<double> breaks{0.0};
  std::vector<double> values{0.0};
  breaks.reserve(h.cells().size() + 1);
  values.reserve(h.cells().size() + 1);
  double running = 0.0;
  for (const auto& c : h.cells()) {
    running += c.mass();
    breaks.push_back(interval_of(c.node).right);
    values.push_back(running);
  }
  return PiecewiseLinearCdf(std::move(breaks), std::move(values));
}

double sup_distance(const PiecewiseLinearCdf& a, const PiecewiseLinearCdf& b) {
  std::vector<double> points;
  points.reserve(a.breaks().size() + b.breaks().size());
  std::merge(a.breaks().begin(), a.breaks().end(), b.breaks().begin(), b.breaks().end(),
             std::back_inserter(points));
  points.erase(std::unique(points.begin(), points.end()), points.end());
  double best = 0.0;
  for (double t : points) best = std::max(best, std::abs(a(t) - b(t)));
  return best;
}

// --- Text formats -----------------------------------------------------------

std::vector<double> read_samples(std::istream& in) {
  std::vector<double> data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(line.substr(first), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": not a number");
    }
    if (line.find_first_not_of(" \t\r", first + used) != std::string::npos) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": trailing characters");
    }
    if (!(x >= 0.0 && x < 1.0)) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": sample outside [0,1)");
    }
    data.push_back(x);
  }
  return data;
}

void write_samples(std::ostream& out, std::span<const double> data) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (double x : data) out << x << '\n';
}

void write_histogram_csv(std::ostream& out, const DyadicHistogram& h) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "left,right,height\n";
  for (const auto& c : h.cells()) {
    const Interval iv = interval_of(c.node);
    out << iv.left << ',' << iv.right << ',' << c.height << '\n';
  }
}

void write_cdf_csv(std::ostream& out, const PiecewiseLinearCdf& cdf) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "t,F\n";
  for (std::size_t i = 0; i < cdf.breaks().size(); ++i) {
    out << cdf.breaks()[i] << ',' << cdf.values()[i] << '\n';
  }
}

}  // namespace optree
