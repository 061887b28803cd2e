#pragma once

// Bucketed nearest-generator queries for the coverage fields
//   jm:   x -> min_i (s_i + |x - x_i|)
//   spbm: x -> k-th smallest |x - p_i| / Y_i
// Both are exact; the bucket grid only prunes generators that provably
// cannot improve the current answer.

#include <cstddef>
#include <vector>

#include "jmcover/geom.hpp"

namespace jmcover {

class BucketGrid {
 public:
  BucketGrid() = default;
  BucketGrid(const std::vector<Point>& points, int dim, Point lo, Point hi, double target_per_cell = 2.0);

  int dim() const { return dim_; }
  double cell() const { return cell_; }
  /// Integer cell coordinates of p, clamped to the grid.
  void cell_of(Point p, int c[3]) const;
  int ncells(int axis) const { return n_[axis]; }
  /// Point indices stored in cell (i, j, l).
  std::pair<const int*, const int*> bucket(int i, int j, int l) const;
  /// Lower bound on |x - p| for any p in a cell at Chebyshev ring r around
  /// the cell of x.
  double ring_lower_bound(Point x, int r) const;
  int max_ring() const { return n_[0] + n_[1] + n_[2]; }

 private:
  int dim_ = 2;
  Point lo_;
  double cell_ = 1.0;
  int n_[3] = {1, 1, 1};
  std::vector<int> start_;
  std::vector<int> items_;
};

/// Calls f(index) for every point in Chebyshev ring r around x's cell.
template <typename F>
void for_each_in_ring(const BucketGrid& g, Point x, int r, F&& f) {
  int c[3];
  g.cell_of(x, c);
  const int zr = g.dim() == 3 ? r : 0;
  for (int l = c[2] - zr; l <= c[2] + zr; ++l) {
    if (l < 0 || l >= g.ncells(2)) continue;
    for (int j = c[1] - r; j <= c[1] + r; ++j) {
      if (j < 0 || j >= g.ncells(1)) continue;
      for (int i = c[0] - r; i <= c[0] + r; ++i) {
        if (i < 0 || i >= g.ncells(0)) continue;
        const bool on_shell = std::abs(i - c[0]) == r || std::abs(j - c[1]) == r || std::abs(l - c[2]) == r;
        if (!on_shell) continue;
        auto [b, e] = g.bucket(i, j, l);
        for (; b != e; ++b) f(*b);
      }
    }
  }
}

class JmFieldEvaluator {
 public:
  JmFieldEvaluator(std::vector<Point> seeds, std::vector<double> births, int dim, Point lo, Point hi);
  double operator()(Point x) const;
  /// Index of the minimizing seed (lowest index on ties), -1 if none.
  int argmin(Point x) const;
  std::size_t size() const { return seeds_.size(); }

 private:
  std::vector<Point> seeds_;
  std::vector<double> births_;
  double min_birth_ = 0.0;
  BucketGrid grid_;
};

class SpbmFieldEvaluator {
 public:
  SpbmFieldEvaluator(std::vector<Point> centers, std::vector<double> weights, int k, int dim, Point lo, Point hi);
  double operator()(Point x) const;
  int argmin(Point x) const;
  int k() const { return k_; }
  double min_weight() const { return min_weight_; }

 private:
  std::vector<Point> centers_;
  std::vector<double> weights_;
  std::vector<int> usable_;
  int k_ = 1;
  double max_weight_ = 0.0;
  double min_weight_ = 0.0;
  BucketGrid grid_;
};

}  // namespace jmcover
