#include "jmcover/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jmcover {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BucketGrid::BucketGrid(const std::vector<Point>& points, int dim, Point lo, Point hi, double target_per_cell)
    : dim_(dim) {
  for (const auto& p : points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  if (dim_ == 2) lo.z = hi.z = 0.0;
  const double ext[3] = {std::max(hi.x - lo.x, 1e-300), std::max(hi.y - lo.y, 1e-300),
                         dim_ == 3 ? std::max(hi.z - lo.z, 1e-300) : 1.0};
  const double volume = ext[0] * ext[1] * ext[2];
  const double cells_wanted = std::max(1.0, static_cast<double>(points.size()) / target_per_cell);
  cell_ = std::pow(volume / cells_wanted, 1.0 / dim_);
  // Keep very elongated windows from producing degenerate grids.
  cell_ = std::max(cell_, std::max({ext[0], ext[1], dim_ == 3 ? ext[2] : 0.0}) / 4096.0);
  lo_ = lo;
  for (int a = 0; a < 3; ++a) {
    n_[a] = (a == 2 && dim_ == 2) ? 1 : std::max(1, static_cast<int>(std::ceil(ext[a] / cell_)));
  }
  const std::size_t total = static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
  std::vector<int> counts(total + 1, 0);
  std::vector<int> cell_index(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    int c[3];
    cell_of(points[i], c);
    cell_index[i] = (c[2] * n_[1] + c[1]) * n_[0] + c[0];
    ++counts[cell_index[i] + 1];
  }
  for (std::size_t c = 0; c < total; ++c) counts[c + 1] += counts[c];
  start_ = counts;
  items_.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) items_[counts[cell_index[i]]++] = static_cast<int>(i);
}

void BucketGrid::cell_of(Point p, int c[3]) const {
  const double v[3] = {p.x - lo_.x, p.y - lo_.y, p.z - lo_.z};
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor(v[a] / cell_);
    c[a] = static_cast<int>(std::clamp(f, 0.0, static_cast<double>(n_[a] - 1)));
  }
}

std::pair<const int*, const int*> BucketGrid::bucket(int i, int j, int l) const {
  const std::size_t c = (static_cast<std::size_t>(l) * n_[1] + j) * n_[0] + i;
  return {items_.data() + start_[c], items_.data() + start_[c + 1]};
}

double BucketGrid::ring_lower_bound(Point x, int r) const {
  if (r <= 1) return 0.0;
  // Distance from x to the grid box, for queries that were clamped.
  double out2 = 0.0;
  const double v[3] = {x.x - lo_.x, x.y - lo_.y, x.z - lo_.z};
  for (int a = 0; a < dim_; ++a) {
    const double ext = n_[a] * cell_;
    const double o = v[a] < 0 ? -v[a] : (v[a] > ext ? v[a] - ext : 0.0);
    out2 += o * o;
  }
  return std::max(0.0, (r - 1) * cell_ - std::sqrt(out2));
}

JmFieldEvaluator::JmFieldEvaluator(std::vector<Point> seeds, std::vector<double> births, int dim, Point lo,
                                   Point hi)
    : seeds_(std::move(seeds)), births_(std::move(births)) {
  min_birth_ = births_.empty() ? 0.0 : *std::min_element(births_.begin(), births_.end());
  grid_ = BucketGrid(seeds_, dim, lo, hi);
}

double JmFieldEvaluator::operator()(Point x) const {
  if (seeds_.empty()) return kInf;
  double best = kInf;
  for (int r = 0; r <= grid_.max_ring(); ++r) {
    for_each_in_ring(grid_, x, r, [&](int i) { best = std::min(best, births_[i] + distance(x, seeds_[i])); });
    if (best <= grid_.ring_lower_bound(x, r + 1) + min_birth_) break;
  }
  return best;
}

int JmFieldEvaluator::argmin(Point x) const {
  double best = kInf;
  int arg = -1;
  for (int r = 0; r <= grid_.max_ring(); ++r) {
    for_each_in_ring(grid_, x, r, [&](int i) {
      const double v = births_[i] + distance(x, seeds_[i]);
      if (v < best || (v == best && i < arg)) {
        best = v;
        arg = i;
      }
    });
    if (arg >= 0 && best < grid_.ring_lower_bound(x, r + 1) + min_birth_) break;
  }
  return arg;
}

SpbmFieldEvaluator::SpbmFieldEvaluator(std::vector<Point> centers, std::vector<double> weights, int k, int dim,
                                       Point lo, Point hi)
    : k_(k) {
  std::vector<Point> usable_pts;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (weights[i] > 0.0) {
      usable_.push_back(static_cast<int>(i));
      usable_pts.push_back(centers[i]);
      centers_.push_back(centers[i]);
      weights_.push_back(weights[i]);
    }
  }
  if (!weights_.empty()) {
    max_weight_ = *std::max_element(weights_.begin(), weights_.end());
    min_weight_ = *std::min_element(weights_.begin(), weights_.end());
  }
  grid_ = BucketGrid(usable_pts, dim, lo, hi);
}

double SpbmFieldEvaluator::operator()(Point x) const {
  if (static_cast<int>(centers_.size()) < k_) return kInf;
  // k smallest values seen so far, ascending.
  double small_buf[16];
  std::vector<double> big_buf;
  double* top = small_buf;
  if (k_ > 16) {
    big_buf.resize(k_);
    top = big_buf.data();
  }
  int have = 0;
  auto offer = [&](double v) {
    if (have == k_ && v >= top[k_ - 1]) return;
    int pos = have < k_ ? have++ : k_ - 1;
    while (pos > 0 && top[pos - 1] > v) {
      top[pos] = top[pos - 1];
      --pos;
    }
    top[pos] = v;
  };
  for (int r = 0; r <= grid_.max_ring(); ++r) {
    for_each_in_ring(grid_, x, r, [&](int i) { offer(distance(x, centers_[i]) / weights_[i]); });
    if (have == k_ && top[k_ - 1] <= grid_.ring_lower_bound(x, r + 1) / max_weight_) break;
  }
  return have == k_ ? top[k_ - 1] : kInf;
}

int SpbmFieldEvaluator::argmin(Point x) const {
  if (centers_.empty()) return -1;
  double best = kInf;
  int arg = -1;
  for (int r = 0; r <= grid_.max_ring(); ++r) {
    for_each_in_ring(grid_, x, r, [&](int i) {
      const double v = distance(x, centers_[i]) / weights_[i];
      const int orig = usable_[i];
      if (v < best || (v == best && orig < arg)) {
        best = v;
        arg = orig;
      }
    });
    if (arg >= 0 && best < grid_.ring_lower_bound(x, r + 1) / max_weight_) break;
  }
  return arg;
}

}  // namespace jmcover
