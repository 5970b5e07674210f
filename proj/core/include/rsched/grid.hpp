#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rsched {

enum class Space { original, folded };

/// Uniform error grid. Nodes are j * spacing for j in [-half, half]
/// (original) or [0, half] (folded), so the folded grid is node-for-node the
/// non-negative half of the original one.
class Grid {
 public:
  /// `n_points` is the original-grid cardinality and must be odd and >= 3.
  Grid(Space space, double delta_max, int n_points);

  Space space() const { return space_; }
  double delta_max() const { return delta_max_; }
  double spacing() const { return spacing_; }
  int half() const { return half_; }
  /// Original-grid cardinality, independent of space().
  int n_points() const { return 2 * half_ + 1; }

  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> nodes() const { return nodes_; }

  /// Index of the node at 0.
  std::size_t zero_index() const { return space_ == Space::original ? half_ : 0; }
  /// Index of the node at -node(i) (original grid only).
  std::size_t mirror(std::size_t i) const { return size() - 1 - i; }
  /// Offset j such that node(i) == j * spacing.
  int offset(std::size_t i) const { return static_cast<int>(i) - static_cast<int>(zero_index()); }

  Grid with_space(Space space) const { return Grid(space, delta_max_, n_points()); }

 private:
  Space space_;
  double delta_max_;
  int half_;
  double spacing_;
  std::vector<double> nodes_;
};

/// Evaluates stored node values off-grid, piecewise linear in delta^2.
/// Beyond the outermost node the chord over the last unit of |delta| is
/// extended (still linear in delta^2). On the folded grid the argument is
/// reflected to |y|.
class SquaredInterpolator {
 public:
  SquaredInterpolator(const Grid& grid, std::span<const double> values);

  double operator()(double y) const;
  /// Value at offset j * spacing; exact on nodes, extrapolated outside.
  double at_offset(long j) const;
  /// Slope d value / d(delta^2) of the extrapolation chord(s); the larger of
  /// the two sides on the original grid.
  double tail_slope() const;

 private:
  const Grid* grid_;
  std::span<const double> values_;
};

}  // namespace rsched
