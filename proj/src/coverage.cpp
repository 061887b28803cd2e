#include "jmcover/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <omp.h>

#include "jmcover/error.hpp"
#include "jmcover/field.hpp"

namespace jmcover {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform grid over a box; each cell lists the disks whose (padded)
// bounding box overlaps it, so any point's cell lists every disk that can
// contain it.
class DiskIndex {
 public:
  DiskIndex(const std::vector<Disk>& disks, Point lo, Point hi, double pad) : disks_(disks), lo_(lo) {
    std::vector<double> radii;
    radii.reserve(disks.size());
    for (const auto& d : disks) radii.push_back(d.radius);
    const double ext_x = std::max(hi.x - lo.x, 1e-300), ext_y = std::max(hi.y - lo.y, 1e-300);
    double cell = std::sqrt(ext_x * ext_y / std::max<std::size_t>(1, disks.size()));
    if (!radii.empty()) {
      auto mid = radii.begin() + static_cast<std::ptrdiff_t>(radii.size() / 2);
      std::nth_element(radii.begin(), mid, radii.end());
      cell = std::max(cell, 2.0 * *mid);
    }
    cell = std::max(cell, std::max(ext_x, ext_y) / 2048.0);
    cell_ = cell;
    nx_ = std::max(1, static_cast<int>(std::ceil(ext_x / cell)));
    ny_ = std::max(1, static_cast<int>(std::ceil(ext_y / cell)));
    const std::size_t ncell = static_cast<std::size_t>(nx_) * ny_;
    std::vector<int> counts(ncell + 1, 0);
    auto range = [&](const Disk& d, int& i0, int& i1, int& j0, int& j1) {
      const double r = d.radius + pad;
      i0 = clampi(std::floor((d.center.x - r - lo_.x) / cell_), nx_);
      i1 = clampi(std::floor((d.center.x + r - lo_.x) / cell_), nx_);
      j0 = clampi(std::floor((d.center.y - r - lo_.y) / cell_), ny_);
      j1 = clampi(std::floor((d.center.y + r - lo_.y) / cell_), ny_);
    };
    for (const auto& d : disks) {
      int i0, i1, j0, j1;
      range(d, i0, i1, j0, j1);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) ++counts[static_cast<std::size_t>(j) * nx_ + i + 1];
    }
    for (std::size_t c = 0; c < ncell; ++c) counts[c + 1] += counts[c];
    start_ = counts;
    items_.resize(counts[ncell]);
    for (std::size_t n = 0; n < disks.size(); ++n) {
      int i0, i1, j0, j1;
      range(disks[n], i0, i1, j0, j1);
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) items_[counts[static_cast<std::size_t>(j) * nx_ + i]++] = static_cast<int>(n);
    }
  }

  int cell_of(Point p) const {
    const int i = clampi(std::floor((p.x - lo_.x) / cell_), nx_);
    const int j = clampi(std::floor((p.y - lo_.y) / cell_), ny_);
    return j * nx_ + i;
  }
  int cells() const { return nx_ * ny_; }
  std::pair<const int*, const int*> list(int c) const {
    return {items_.data() + start_[c], items_.data() + start_[c + 1]};
  }

 private:
  static int clampi(double f, int n) { return static_cast<int>(std::clamp(f, 0.0, static_cast<double>(n - 1))); }

  const std::vector<Disk>& disks_;
  Point lo_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<int> start_;
  std::vector<int> items_;
};

// Cells of a coarse grid over the window bounding box that may hold a
// vacancy at the level being tested (dilated by one cell). Every vacant
// component of w lies inside them, and so do its extreme points.
struct ActiveMask {
  Point origin;
  double h = 1.0;
  int nx = 0, ny = 0;
  std::vector<int> prefix;  // (nx + 1) x (ny + 1) running counts of active cells

  int ci(double x) const { return static_cast<int>(std::floor((x - origin.x) / h)); }
  int cj(double y) const { return static_cast<int>(std::floor((y - origin.y) / h)); }
  bool any(int i0, int i1, int j0, int j1) const {
    i0 = std::max(i0, 0), j0 = std::max(j0, 0);
    i1 = std::min(i1, nx - 1), j1 = std::min(j1, ny - 1);
    if (i0 > i1 || j0 > j1) return false;
    const int w = nx + 1;
    return prefix[(j1 + 1) * w + i1 + 1] - prefix[j0 * w + i1 + 1] - prefix[(j1 + 1) * w + i0] + prefix[j0 * w + i0] > 0;
  }
  bool at(Point p) const {
    const int i = std::clamp(ci(p.x), 0, nx - 1), j = std::clamp(cj(p.y), 0, ny - 1);
    return any(i, i, j, j);
  }
};

struct Candidate {
  enum class Kind { interior, wedge, crossing };
  Kind kind = Kind::interior;
  Point p;
  Point dir[2];  // wedge: dir[0] is the probe direction; crossing: tangents
};

// Exact-to-tolerance k-coverage test of a planar window by disks. Vacant
// regions are bounded by arcs with the vacancy on the outside of the disk,
// so each vacant component has an extreme point at a window corner, a
// circle/boundary crossing or a circle/circle crossing inside w.
class Verifier {
 public:
  Verifier(const Window& w, const std::vector<Disk>& disks, int k, double tol, const ActiveMask* mask = nullptr)
      : w_(w), k_(k), tol_(tol), delta_(10.0 * tol), reach_(std::max(delta_, 1e-3 * w.diameter())), mask_(mask) {
    if (w.dim() != 2) throw UnsupportedDimension("exact coverage verification is implemented for d = 2 only");
    if (k < 1) throw InvalidArgument("k must be at least 1");
    for (const auto& d : disks) {
      if (!(d.radius > 0.0)) continue;
      if (w.distance_to(d.center) > d.radius + tol) continue;
      if (w.farthest_distance(d.center) <= d.radius - tol) {
        ++base_;
        continue;
      }
      if (mask_) {
        const double r = d.radius + 2 * delta_;
        if (!mask_->any(mask_->ci(d.center.x - r), mask_->ci(d.center.x + r), mask_->cj(d.center.y - r),
                        mask_->cj(d.center.y + r)))
          continue;
      }
      disks_.push_back(d);
    }
    const Point pad{2 * delta_, 2 * delta_, 0.0};
    index_ = std::make_unique<DiskIndex>(disks_, w.bbox_lo() - pad, w.bbox_hi() + pad, 2.0 * tol);
  }

  int closed_count(Point p) const {
    int c = base_;
    auto [b, e] = index_->list(index_->cell_of(p));
    for (; b != e; ++b) {
      const Disk& d = disks_[*b];
      if (distance(p, d.center) <= d.radius + tol_) ++c;
    }
    return c;
  }

  int open_count(Point p, int stop) const {
    int c = base_;
    if (c >= stop) return c;
    auto [b, e] = index_->list(index_->cell_of(p));
    for (; b != e; ++b) {
      const Disk& d = disks_[*b];
      if (distance(p, d.center) <= d.radius - tol_ && ++c >= stop) return c;
    }
    return c;
  }

  // Calls f(Candidate) for every candidate; stops early when f returns false.
  template <typename F>
  bool enumerate(F&& emit) const {
    auto f = [&](const Candidate& c) { return (mask_ && !mask_->at(c.p)) || emit(c); };
    if (!f(Candidate{Candidate::Kind::interior, w_.interior_point(), {}})) return false;
    if (w_.has_edges()) {
      const auto v = w_.vertices();
      const std::size_t n = v.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Point p = v[i];
        const Point u1 = normalized(v[(i + n - 1) % n] - p);
        const Point u2 = normalized(v[(i + 1) % n] - p);
        Point b = u1 + u2;
        if (norm(b) < 1e-12) {
          b = perp2(u2);
        } else {
          b = normalized(b);
          if (cross2(p - v[(i + n - 1) % n], v[(i + 1) % n] - p) < 0) b = -1.0 * b;  // reflex
        }
        if (!f(Candidate{Candidate::Kind::wedge, p, {b, {}}})) return false;
      }
    } else {
      const Point p = w_.center() + Point{w_.radius(), 0.0, 0.0};
      if (!f(Candidate{Candidate::Kind::wedge, p, {{-1.0, 0.0, 0.0}, {}}})) return false;
    }

    // Circle/circle crossings, each owned by the cell that contains it.
    Point out[2];
    for (int c = 0; c < index_->cells(); ++c) {
      auto [b, e] = index_->list(c);
      for (const int* ia = b; ia != e; ++ia) {
        const Disk& da = disks_[*ia];
        for (const int* ib = ia + 1; ib != e; ++ib) {
          const Disk& db = disks_[*ib];
          const double dx = da.center.x - db.center.x, dy = da.center.y - db.center.y;
          const double d2 = dx * dx + dy * dy;
          const double rs = da.radius + db.radius + tol_;
          if (d2 > rs * rs) continue;
          const int m = detail::intersect_circles(da.center, da.radius, db.center, db.radius, tol_, out);
          for (int q = 0; q < m; ++q) {
            if (index_->cell_of(out[q]) != c) continue;
            if (!w_.contains(out[q], tol_)) continue;
            const Candidate cand{Candidate::Kind::crossing, out[q],
                                 {normalized(perp2(out[q] - da.center)), normalized(perp2(out[q] - db.center))}};
            if (!f(cand)) return false;
          }
        }
      }
    }

    // Circle/boundary crossings.
    for (const auto& d : disks_) {
      if (w_.kind() == WindowKind::disc) {
        const int m = detail::intersect_circles(d.center, d.radius, w_.center(), w_.radius(), tol_, out);
        for (int q = 0; q < m; ++q) {
          const Candidate cand{Candidate::Kind::crossing, out[q],
                               {normalized(perp2(out[q] - d.center)), normalized(perp2(out[q] - w_.center()))}};
          if (!f(cand)) return false;
        }
        continue;
      }
      for (std::size_t i = 0; i < w_.edge_count(); ++i) {
        const auto [a, b] = w_.edge(i);
        const int m = detail::intersect_circle_segment(d.center, d.radius, a, b, tol_, out);
        for (int q = 0; q < m; ++q) {
          const Candidate cand{Candidate::Kind::crossing, out[q], {normalized(perp2(out[q] - d.center)), normalized(b - a)}};
          if (!f(cand)) return false;
        }
      }
    }
    return true;
  }

  CoverageVerdict run() const {
    CoverageVerdict verdict;
    if (base_ >= k_) {
      verdict.covered = true;
      return verdict;
    }
    bool ambiguous = false;
    const bool all_pass = enumerate([&](const Candidate& c) { return test(c, verdict, ambiguous); });
    verdict.covered = all_pass;
    verdict.ambiguous = all_pass && ambiguous;
    return verdict;
  }

 private:
  bool fail(Point q, int count, CoverageVerdict& v) const {
    v.covered = false;
    v.witness = q;
    v.deficit = k_ - count;
    return false;
  }

  // Returns false (and fills the verdict) when the candidate exposes a deficit.
  bool test(const Candidate& c, CoverageVerdict& v, bool& ambiguous) const {
    if (c.kind == Candidate::Kind::interior) {
      const int n = closed_count(c.p);
      return n >= k_ ? true : fail(c.p, n, v);
    }
    if (open_count(c.p, k_) >= k_) return true;
    const int here = closed_count(c.p);
    if (here < k_) return fail(w_.contains(c.p) ? c.p : w_.project(c.p), here, v);

    Point probes[4];
    int np = 0;
    if (c.kind == Candidate::Kind::wedge) {
      probes[np++] = c.dir[0];
    } else {
      Point b1 = c.dir[0] + c.dir[1];
      Point b2 = c.dir[0] - c.dir[1];
      if (norm(b1) < 1e-12) b1 = perp2(c.dir[0]);
      if (norm(b2) < 1e-12) b2 = perp2(c.dir[0]);
      b1 = normalized(b1);
      b2 = normalized(b2);
      probes[np++] = b1;
      probes[np++] = -1.0 * b1;
      probes[np++] = b2;
      probes[np++] = -1.0 * b2;
    }
    // Thin wedges stay inside the tolerance band near the apex, so walk
    // outwards until the probe is clearly inside k disks.
    for (int i = 0; i < np; ++i) {
      for (double s = delta_; s <= reach_; s *= 4.0) {
        const Point q = c.p + s * probes[i];
        if (!w_.contains(q) || (mask_ && !mask_->at(q))) break;
        const int n = closed_count(q);
        if (n < k_) return fail(q, n, v);
        if (open_count(q, k_) >= k_) break;
      }
    }

    // Undecided within the probe band: refine on a local grid.
    const double h = delta_ / 10.0;
    for (int j = -20; j <= 20; ++j) {
      for (int i = -20; i <= 20; ++i) {
        const Point q = c.p + Point{i * h, j * h, 0.0};
        if (!w_.contains(q) || (mask_ && !mask_->at(q))) continue;
        const int n = closed_count(q);
        if (n < k_) return fail(q, n, v);
      }
    }
    ambiguous = true;
    return true;
  }

  const Window& w_;
  int k_;
  double tol_;
  double delta_;
  double reach_;
  const ActiveMask* mask_;
  int base_ = 0;
  std::vector<Disk> disks_;
  std::unique_ptr<DiskIndex> index_;
};

template <typename Pred>
double bisect(Pred&& covered, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (covered(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}


}  // namespace

double default_geom_tol(const Window& w) { return kGeomTol * w.diameter(); }
double default_bisection_tol(const Window& w) { return 1e-7 * w.diameter(); }

double xi_jm(Point x, const GrowthConfiguration& g) {
  double best = kInf;
  const auto& s = g.seeds;
  for (std::size_t i = 0; i < s.size(); ++i) best = std::min(best, s.marks[i] + distance(x, s.points[i]));
  return best;
}

double xi_spbm(Point x, const MarkedPointSet& pts, int k) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  std::vector<double> v;
  v.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts.marks[i] > 0.0) v.push_back(distance(x, pts.points[i]) / pts.marks[i]);
  }
  if (static_cast<int>(v.size()) < k) return kInf;
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
  return v[static_cast<std::size_t>(k - 1)];
}

CoverCount cover_count(Point p, const std::vector<Disk>& disks, double tol) {
  CoverCount c;
  for (const auto& d : disks) {
    const double dist = distance(p, d.center);
    if (dist <= d.radius + tol) ++c.closed;
    if (dist <= d.radius - tol) ++c.open;
  }
  return c;
}

CoverageVerdict is_k_covered(const Window& w, const std::vector<Disk>& disks, int k, double tol) {
  return Verifier(w, disks, k, tol).run();
}

std::vector<Disk> disks_at_time(const GrowthConfiguration& g, double t) {
  std::vector<Disk> out;
  const auto& s = g.seeds;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.marks[i] < t) out.push_back({s.points[i], t - s.marks[i]});
  }
  return out;
}

std::vector<Disk> disks_at_scale(const MarkedPointSet& pts, double r) {
  std::vector<Disk> out;
  out.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts.points[i], r * pts.marks[i]});
  return out;
}

// ---------------------------------------------------------------------------
// Oracles

struct OracleField::Impl {
  std::variant<JmFieldEvaluator, SpbmFieldEvaluator> eval;
};

OracleField OracleField::jm(const GrowthConfiguration& g) {
  OracleField f;
  const auto& s = g.seeds;
  f.dim_ = s.dim;
  f.lipschitz_ = 1.0;
  f.impl_ = std::make_shared<Impl>(
      Impl{JmFieldEvaluator(s.points, s.marks, s.dim, s.window.bbox_lo(), s.window.bbox_hi())});
  return f;
}

OracleField OracleField::spbm(const MarkedPointSet& pts, int k) {
  if (k < 1) throw InvalidArgument("k must be at least 1");
  OracleField f;
  f.dim_ = pts.dim;
  SpbmFieldEvaluator ev(pts.points, pts.marks, k, pts.dim, pts.window.bbox_lo(), pts.window.bbox_hi());
  if (!(ev.min_weight() > 0.0)) throw InvalidArgument("spbm oracle needs positive marks");
  f.lipschitz_ = 1.0 / ev.min_weight();
  f.impl_ = std::make_shared<Impl>(Impl{std::move(ev)});
  return f;
}

OracleField OracleField::disks(const std::vector<Disk>& disks, int k, int dim) {
  MarkedPointSet pts;
  pts.dim = dim;
  for (const auto& d : disks) {
    if (d.radius > 0.0) {
      pts.points.push_back(d.center);
      pts.marks.push_back(d.radius);
    }
  }
  if (pts.empty()) {
    pts.points.push_back({});
    pts.marks.push_back(1e-300);
  }
  return spbm(pts, k);
}

double OracleField::operator()(Point x) const {
  return std::visit([&](const auto& ev) { return ev(x); }, impl_->eval);
}

namespace {

struct Best {
  double value = -kInf;
  Point where;
  void offer(double v, Point p) {
    if (v > value) {
      value = v;
      where = p;
    }
  }
};

// Sample set of the certified grid: see grid_oracle_max.
Best grid_scan(const OracleField& field, const Window& w, double h, bool parallel) {
  if (!(h > 0.0)) throw InvalidArgument("grid spacing must be positive");
  if (h > w.inradius_bound()) throw InvalidArgument("grid spacing exceeds the window inradius");
  const Point lo = w.bbox_lo(), hi = w.bbox_hi();
  const bool aligned = w.kind() == WindowKind::box;

  int n[3] = {1, 1, 1};
  double step[3] = {h, h, h};
  for (int a = 0; a < w.dim(); ++a) {
    const double ext = a == 0 ? hi.x - lo.x : a == 1 ? hi.y - lo.y : hi.z - lo.z;
    n[a] = std::max(1, static_cast<int>(std::ceil(ext / h - 1e-9)));
    if (aligned) step[a] = ext / n[a];
  }
  const int rows = n[1] * n[2];
  std::vector<Best> row_best(static_cast<std::size_t>(rows));
  auto scan_row = [&](int row) {
    const int j = row % n[1], l = row / n[1];
    Best b;
    for (int i = 0; i < n[0]; ++i) {
      const Point c{lo.x + (i + 0.5) * step[0], lo.y + (j + 0.5) * step[1],
                    w.dim() == 3 ? lo.z + (l + 0.5) * step[2] : 0.0};
      if (aligned || w.contains(c)) b.offer(field(c), c);
    }
    row_best[static_cast<std::size_t>(row)] = b;
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int row = 0; row < rows; ++row) scan_row(row);
  } else {
    for (int row = 0; row < rows; ++row) scan_row(row);
  }
  Best best;
  for (const auto& b : row_best) best.offer(b.value, b.where);

  if (!aligned) {
    auto cell_box = [&](int i, int j, Point& clo, Point& chi) {
      clo = {lo.x + i * h, lo.y + j * h, 0.0};
      chi = {clo.x + h, clo.y + h, 0.0};
    };
    if (w.kind() == WindowKind::disc) {
      for (int j = 0; j < n[1]; ++j) {
        for (int i = 0; i < n[0]; ++i) {
          Point clo, chi;
          cell_box(i, j, clo, chi);
          const Point c = 0.5 * (clo + chi);
          if (w.contains(c)) continue;
          const Point q{std::clamp(w.center().x, clo.x, chi.x), std::clamp(w.center().y, clo.y, chi.y), 0.0};
          if (distance(q, w.center()) <= w.radius()) {
            const Point p = w.project(c);
            best.offer(field(p), p);
          }
        }
      }
    } else {
      // Projection onto a boundary segment is non-expansive, so the
      // projection of an outside centre onto each segment crossing the
      // cell stays within h sqrt(2)/2 of the part of the cell inside w.
      for (std::size_t e = 0; e < w.edge_count(); ++e) {
        const auto [a, b] = w.edge(e);
        const int i0 = std::clamp(static_cast<int>(std::floor((std::min(a.x, b.x) - lo.x) / h)), 0, n[0] - 1);
        const int i1 = std::clamp(static_cast<int>(std::floor((std::max(a.x, b.x) - lo.x) / h)), 0, n[0] - 1);
        const int j0 = std::clamp(static_cast<int>(std::floor((std::min(a.y, b.y) - lo.y) / h)), 0, n[1] - 1);
        const int j1 = std::clamp(static_cast<int>(std::floor((std::max(a.y, b.y) - lo.y) / h)), 0, n[1] - 1);
        for (int j = j0; j <= j1; ++j) {
          for (int i = i0; i <= i1; ++i) {
            Point clo, chi;
            cell_box(i, j, clo, chi);
            const Point c = 0.5 * (clo + chi);
            if (w.contains(c) || !detail::segment_hits_box(a, b, clo, chi)) continue;
            const Point p = detail::project_to_segment(c, a, b);
            best.offer(field(p), p);
          }
        }
      }
    }
  }
  for (const auto& v : w.vertices()) best.offer(field(v), v);
  return best;
}

CertifiedInterval certify(const OracleField& field, const Window& w, double h, const Best& best) {
  CertifiedInterval ci;
  ci.lower = best.value;
  ci.lipschitz_used = field.lipschitz();
  ci.grid_spacing = h;
  ci.upper = ci.lower + field.lipschitz() * h * std::sqrt(static_cast<double>(w.dim())) / 2.0 + 5e-13;
  return ci;
}

}  // namespace

CertifiedInterval grid_oracle_max(const OracleField& field, const Window& w, double h) {
  return certify(field, w, h, grid_scan(field, w, h, true));
}

CertifiedInterval grid_oracle_max_serial(const OracleField& field, const Window& w, double h) {
  return certify(field, w, h, grid_scan(field, w, h, false));
}

Point grid_oracle_argmax(const OracleField& field, const Window& w, double h) {
  return grid_scan(field, w, h, true).where;
}

// ---------------------------------------------------------------------------
// Thresholds and cover times

namespace {

double geom_tol_for(const Window& w, double tol) { return std::min(default_geom_tol(w), tol / 100.0); }

// Per-cell upper bounds of a Lipschitz field over cell \cap w, from one
// sample s in w per cell: Xi <= Xi(s) + L (|s - c| + h sqrt(2) / 2).
struct CellBounds {
  Point origin;
  double h = 1.0;
  int nx = 0, ny = 0;
  std::vector<double> upper;  // -inf for cells missing w
  double lower = -kInf;       // max of the samples
  double max_upper = -kInf;
};

CellBounds cell_bounds(const OracleField& f, const Window& w, double h) {
  CellBounds b;
  b.origin = w.bbox_lo();
  b.h = h;
  const Point hi = w.bbox_hi();
  b.nx = std::max(1, static_cast<int>(std::ceil((hi.x - b.origin.x) / h - 1e-9)));
  b.ny = std::max(1, static_cast<int>(std::ceil((hi.y - b.origin.y) / h - 1e-9)));
  b.upper.assign(static_cast<std::size_t>(b.nx) * b.ny, -kInf);
  const double half = h * std::numbers::sqrt2 / 2.0;
  const double L = f.lipschitz();
  for (int j = 0; j < b.ny; ++j) {
    for (int i = 0; i < b.nx; ++i) {
      const Point clo{b.origin.x + i * h, b.origin.y + j * h, 0.0};
      const Point chi{clo.x + h, clo.y + h, 0.0};
      const Point c = 0.5 * (clo + chi);
      double u = kInf;
      auto offer = [&](Point s) {
        const double v = f(s);
        b.lower = std::max(b.lower, v);
        u = std::min(u, v + L * (distance(s, c) + half));
      };
      if (w.contains(c)) {
        offer(c);
      } else if (w.kind() == WindowKind::disc) {
        const Point q{std::clamp(w.center().x, clo.x, chi.x), std::clamp(w.center().y, clo.y, chi.y), 0.0};
        if (distance(q, w.center()) <= w.radius()) offer(w.project(c));
      } else {
        for (std::size_t e = 0; e < w.edge_count(); ++e) {
          const auto [p0, p1] = w.edge(e);
          if (detail::segment_hits_box(p0, p1, clo, chi)) offer(detail::project_to_segment(c, p0, p1));
        }
      }
      if (u < kInf) {
        b.upper[static_cast<std::size_t>(j) * b.nx + i] = u;
        b.max_upper = std::max(b.max_upper, u);
      }
    }
  }
  for (const auto& v : w.vertices()) b.lower = std::max(b.lower, f(v));
  return b;
}

ActiveMask active_mask(const CellBounds& b, double level) {
  ActiveMask m;
  m.origin = b.origin;
  m.h = b.h;
  m.nx = b.nx;
  m.ny = b.ny;
  std::vector<char> on(b.upper.size(), 0);
  for (int j = 0; j < b.ny; ++j)
    for (int i = 0; i < b.nx; ++i) {
      if (!(b.upper[static_cast<std::size_t>(j) * b.nx + i] >= level)) continue;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          const int ii = i + di, jj = j + dj;
          if (ii >= 0 && ii < b.nx && jj >= 0 && jj < b.ny) on[static_cast<std::size_t>(jj) * b.nx + ii] = 1;
        }
    }
  const int w = b.nx + 1;
  m.prefix.assign(static_cast<std::size_t>(w) * (b.ny + 1), 0);
  for (int j = 0; j < b.ny; ++j)
    for (int i = 0; i < b.nx; ++i)
      m.prefix[(j + 1) * w + i + 1] = on[static_cast<std::size_t>(j) * b.nx + i] + m.prefix[j * w + i + 1] +
                                      m.prefix[(j + 1) * w + i] - m.prefix[j * w + i];
  return m;
}

// Smallest level at which disks_at(level) k-cover w, to within tol, given
// that lo is uncovered and hi covered. Each test only examines the cells
// where the field bound reaches the level.
template <typename DisksAt>
double threshold_search(const Window& w, const OracleField& field, std::size_t generators, DisksAt&& disks_at, int k,
                        double lo, double hi, double tol, double horizon = kInf) {
  const double gtol = geom_tol_for(w, tol);
  const double cells = std::clamp(2.0 * std::sqrt(static_cast<double>(generators)), 16.0, 128.0);
  const CellBounds bounds = cell_bounds(field, w, std::min(w.diameter() / cells, 0.99 * w.inradius_bound()));
  // Xi reaches bounds.lower somewhere in w, so the threshold does too.
  if (bounds.lower > horizon) throw InsufficientHalo(bounds.lower, horizon);
  const double guard = 20.0 * gtol * field.lipschitz();
  auto covered = [&](double level) {
    const ActiveMask mask = active_mask(bounds, level - guard);
    return Verifier(w, disks_at(level), k, gtol, &mask).run().covered;
  };
  if (std::isfinite(bounds.max_upper)) {
    const double cand_hi = bounds.max_upper + tol;
    if (cand_hi < hi && covered(cand_hi)) hi = cand_hi;
    const double cand_lo = bounds.lower - 10.0 * tol;
    if (cand_lo > lo && cand_lo < hi && !covered(cand_lo)) lo = cand_lo;
  }
  return bisect(covered, lo, hi, tol);
}

}  // namespace

ThresholdResult coverage_threshold(const Window& w, const MarkedPointSet& pts, int k, double tol,
                                   double oracle_h) {
  if (w.dim() != 2) throw UnsupportedDimension("coverage_threshold is implemented for d = 2 only");
  if (k < 1) throw InvalidArgument("k must be at least 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  ThresholdResult result;
  std::vector<double> bound;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts.marks[i] > 0.0) bound.push_back(w.farthest_distance(pts.points[i]) / pts.marks[i]);
  if (static_cast<int>(bound.size()) < k) {
    result.value = kInf;
    return result;
  }
  std::nth_element(bound.begin(), bound.begin() + (k - 1), bound.end());
  const double hi = bound[static_cast<std::size_t>(k - 1)] + tol;
  MarkedPointSet windowed = pts;
  windowed.window = w;
  const OracleField field = OracleField::spbm(windowed, k);
  result.value = threshold_search(w, field, pts.size(), [&](double r) { return disks_at_scale(pts, r); }, k, 0.0, hi, tol);
  if (oracle_h > 0.0) {
    result.oracle = grid_oracle_max(field, w, oracle_h);
    result.oracle_consistent = result.oracle->contains(result.value, tol);
  }
  return result;
}

double jm_cover_time(const Window& w, const GrowthConfiguration& g, double tol) {
  if (w.dim() != 2) throw UnsupportedDimension("jm_cover_time is implemented for d = 2 only");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  const auto& s = g.seeds;
  const double horizon = s.horizon;
  if (s.empty()) {
    if (std::isfinite(horizon)) throw InsufficientHalo(kInf, horizon);
    return kInf;
  }
  double lo = kInf, hi = kInf;
  for (std::size_t i = 0; i < s.size(); ++i) {
    lo = std::min(lo, s.marks[i]);
    hi = std::min(hi, s.marks[i] + w.farthest_distance(s.points[i]));
  }
  hi += tol;
  GrowthConfiguration windowed = g;
  windowed.seeds.window = w;
  const OracleField field = OracleField::jm(windowed);
  const double t =
      threshold_search(w, field, s.size(), [&](double t) { return disks_at_time(g, t); }, 1, lo, hi, tol, horizon);
  if (t > horizon) throw InsufficientHalo(t, horizon);
  return t;
}

ThresholdResult jm_cover_time_checked(const Window& w, const GrowthConfiguration& g, double tol, double oracle_h) {
  ThresholdResult r;
  r.value = jm_cover_time(w, g, tol);
  if (oracle_h > 0.0) {
    GrowthConfiguration windowed = g;
    windowed.seeds.window = w;
    r.oracle = grid_oracle_max(OracleField::jm(windowed), w, oracle_h);
    r.oracle_consistent = r.oracle->contains(r.value, tol);
  }
  return r;
}

namespace {

template <typename Field>
Point refine_argmax(const Window& w, const Field& xi, Point start, double step0, double step_min) {
  Point best = start;
  double best_v = xi(start);
  double step = step0;
  while (step >= step_min) {
    bool moved = false;
    for (int d = 0; d < 8; ++d) {
      const double ang = d * std::numbers::pi / 4.0;
      Point q = best + step * Point{std::cos(ang), std::sin(ang), 0.0};
      if (!w.contains(q)) q = w.project(q);
      const double v = xi(q);
      if (v > best_v) {
        best_v = v;
        best = q;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return best;
}

template <typename Field>
Point argmax_over_candidates(const Window& w, const std::vector<Disk>& disks, int k, double gtol, const Field& xi,
                             double tol) {
  Verifier verifier(w, disks, k, gtol);
  Point best_p = w.interior_point();
  double best_v = -kInf;
  verifier.enumerate([&](const Candidate& c) {
    if (!w.contains(c.p, gtol)) return true;
    const Point p = w.contains(c.p) ? c.p : w.project(c.p);
    const double v = xi(p);
    if (v > best_v) {
      best_v = v;
      best_p = p;
    }
    return true;
  });
  return refine_argmax(w, xi, best_p, std::max(10.0 * tol, 1e-4 * w.diameter()), tol / 10.0);
}

}  // namespace

Point last_covered_point(const Window& w, const GrowthConfiguration& g, double tol) {
  const double t = jm_cover_time(w, g, tol);
  GrowthConfiguration windowed = g;
  windowed.seeds.window = w;
  const OracleField xi = OracleField::jm(windowed);
  return argmax_over_candidates(w, disks_at_time(g, t + tol), 1, geom_tol_for(w, tol), xi, tol);
}

Point last_covered_point(const Window& w, const MarkedPointSet& pts, int k, double tol) {
  const ThresholdResult r = coverage_threshold(w, pts, k, tol);
  if (!std::isfinite(r.value)) throw InvalidArgument("window is never k-covered by these points");
  MarkedPointSet windowed = pts;
  windowed.window = w;
  const OracleField xi = OracleField::spbm(windowed, k);
  return argmax_over_candidates(w, disks_at_scale(pts, r.value + tol), k, geom_tol_for(w, tol), xi, tol);
}

// ---------------------------------------------------------------------------
// Coverage probabilities

ProportionEstimate wilson_interval(long long successes, long long trials, double z) {
  ProportionEstimate e;
  e.successes = successes;
  e.trials = trials;
  if (trials <= 0) {
    e.lo = 0.0;
    e.hi = 1.0;
    return e;
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  e.p = p;
  e.lo = std::max(0.0, centre - half);
  e.hi = std::min(1.0, centre + half);
  return e;
}

bool sample_coverage_event(const Window& w, const CoverageModel& model, bool restricted, RngSpec rng) {
  const double gtol = default_geom_tol(w);
  if (const auto* jm = std::get_if<JmModel>(&model)) {
    GrowthConfiguration g;
    g.restricted = restricted;
    g.seeds = sample_spacetime_poisson(w, jm->rho, jm->t, rng.child(0));
    if (!restricted) g.seeds.append(sample_halo(w, jm->rho, jm->t, rng.child(1)));
    return is_k_covered(w, disks_at_time(g, jm->t), 1, gtol).covered;
  }
  const auto& sp = std::get<SpbmModel>(model);
  MarkedPointSet pts = sample_marked_poisson(w, sp.n, sp.law, rng.child(0));
  if (!restricted) {
    if (!sp.law.bounded())
      throw InvalidArgument("unrestricted Boolean model sampling needs a bounded radius law");
    pts.append(sample_marked_ring(w, sp.n, sp.law, sp.r * sp.law.support_max(), rng.child(1)));
  }
  return is_k_covered(w, disks_at_scale(pts, sp.r), sp.k, gtol).covered;
}

ProportionEstimate coverage_probability_estimate(const Window& w, const CoverageModel& model, bool restricted,
                                                 long long reps, std::uint64_t master_seed, int threads) {
  if (reps < 1) throw InvalidArgument("reps must be at least 1");
  long long hits = 0;
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : hits) num_threads(nt)
  for (long long i = 0; i < reps; ++i) {
    if (sample_coverage_event(w, model, restricted, RngSpec{master_seed, static_cast<std::uint64_t>(i)})) ++hits;
  }
  return wilson_interval(hits, reps);
}

}  // namespace jmcover
