#include "rsched/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace rsched {

Grid::Grid(Space space, double delta_max, int n_points)
    : space_(space), delta_max_(delta_max), half_((n_points - 1) / 2) {
  if (!(delta_max > 0.0) || !std::isfinite(delta_max)) {
    throw std::invalid_argument("delta_max must be > 0");
  }
  if (n_points < 3 || n_points % 2 == 0) {
    throw std::invalid_argument("n_points must be odd and >= 3");
  }
  spacing_ = delta_max / half_;
  const int lo = space == Space::original ? -half_ : 0;
  nodes_.reserve(half_ - lo + 1);
  for (int j = lo; j <= half_; ++j) nodes_.push_back(j * delta_max / half_);
}

SquaredInterpolator::SquaredInterpolator(const Grid& grid, std::span<const double> values)
    : grid_(&grid), values_(values) {
  if (values.size() != grid.size()) {
    throw std::invalid_argument("value vector does not match grid size");
  }
}

namespace {

// Beyond the outermost node the iterate is extended along the chord over
// this much of |delta| at the edge. A one-spacing chord turns O(ulp) noise
// in the edge values into O(ulp / spacing) slope noise.
constexpr double kTailChord = 1.0;

long tail_chord_nodes(const Grid& g) {
  return std::clamp<long>(std::lround(kTailChord / g.spacing()), 1, g.half());
}

// Written from the inner (smaller |x|) node outward so that mirrored
// arguments on mirrored segments produce bit-identical results.
double lerp_sq(double y, double x0, double x1, double v0, double v1) {
  if (std::abs(x1) < std::abs(x0)) {
    std::swap(x0, x1);
    std::swap(v0, v1);
  }
  const double s0 = x0 * x0;
  const double s1 = x1 * x1;
  return v0 + (v1 - v0) * (y * y - s0) / (s1 - s0);
}

}  // namespace

double SquaredInterpolator::operator()(double y) const {
  const Grid& g = *grid_;
  const double h = g.spacing();
  const int half = g.half();
  const auto zero = static_cast<long>(g.zero_index());
  if (g.space() == Space::folded) y = std::abs(y);

  // Segment [j, j+1] in offset units containing y; the end segments extend
  // outward for extrapolation.
  const int lo = g.space() == Space::original ? -half : 0;
  long j = static_cast<long>(std::floor(y / h));
  const long base = tail_chord_nodes(g);
  if (j >= half) {
    const auto i1 = static_cast<std::size_t>(zero + half);
    const auto i0 = i1 - static_cast<std::size_t>(base);
    return lerp_sq(y, g.node(i0), g.node(i1), values_[i0], values_[i1]);
  }
  if (j < lo) {
    const auto i1 = static_cast<std::size_t>(zero + lo);
    const auto i0 = i1 + static_cast<std::size_t>(base);
    return lerp_sq(y, g.node(i0), g.node(i1), values_[i0], values_[i1]);
  }
  const auto i0 = static_cast<std::size_t>(zero + j);
  const auto i1 = i0 + 1;
  return lerp_sq(y, g.node(i0), g.node(i1), values_[i0], values_[i1]);
}

double SquaredInterpolator::at_offset(long j) const {
  const Grid& g = *grid_;
  const long half = g.half();
  if (g.space() == Space::folded) j = std::abs(j);
  const long lo = g.space() == Space::original ? -half : 0;
  if (j >= lo && j <= half) {
    return values_[static_cast<std::size_t>(static_cast<long>(g.zero_index()) + j)];
  }
  return (*this)(static_cast<double>(j) * g.delta_max() / half);
}

double SquaredInterpolator::tail_slope() const {
  const Grid& g = *grid_;
  const std::size_t n = g.size();
  auto slope = [&](std::size_t outer, std::size_t inner) {
    const double so = g.node(outer) * g.node(outer);
    const double si = g.node(inner) * g.node(inner);
    return (values_[outer] - values_[inner]) / (so - si);
  };
  const auto base = static_cast<std::size_t>(tail_chord_nodes(g));
  double s = slope(n - 1, n - 1 - base);
  if (g.space() == Space::original) s = std::max(s, slope(0, base));
  return s;
}

}  // namespace rsched
