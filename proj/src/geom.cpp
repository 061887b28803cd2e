#include "jmcover/geom.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "jmcover/error.hpp"

namespace jmcover {

bool is_finite(Point p) { return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z); }

namespace detail {

Point project_to_segment(Point p, Point a, Point b) {
  const Point d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return a + t * d;
}

double segment_distance(Point p, Point a, Point b) { return distance(p, project_to_segment(p, a, b)); }

bool segment_hits_box(Point a, Point b, Point lo, Point hi) {
  // Liang-Barsky clipping of [a,b] against the axis-aligned box.
  double t0 = 0.0, t1 = 1.0;
  const double d[2] = {b.x - a.x, b.y - a.y};
  const double p0[2] = {a.x, a.y};
  const double blo[2] = {lo.x, lo.y};
  const double bhi[2] = {hi.x, hi.y};
  for (int i = 0; i < 2; ++i) {
    if (d[i] == 0.0) {
      if (p0[i] < blo[i] || p0[i] > bhi[i]) return false;
      continue;
    }
    double ta = (blo[i] - p0[i]) / d[i];
    double tb = (bhi[i] - p0[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

int intersect_circles(Point c1, double r1, Point c2, double r2, double tol, Point out[2]) {
  const Point delta = c2 - c1;
  const double d = norm(delta);
  if (d <= tol) return -1;
  if (d > r1 + r2 + tol) return 0;
  if (d < std::abs(r1 - r2) - tol) return 0;
  const Point u = (1.0 / d) * delta;
  if (std::abs(d - (r1 + r2)) <= tol) {
    out[0] = c1 + r1 * u;
    return 1;
  }
  if (std::abs(d - std::abs(r1 - r2)) <= tol) {
    out[0] = r1 >= r2 ? c1 + r1 * u : c1 - r1 * u;
    return 1;
  }
  const double a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
  const double h = std::sqrt(std::max(0.0, r1 * r1 - a * a));
  const Point base = c1 + a * u;
  const Point n = perp2(u);
  out[0] = base + h * n;
  out[1] = base - h * n;
  return 2;
}

int intersect_circle_segment(Point c, double r, Point a, Point b, double tol, Point out[2]) {
  const Point d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return 0;
  const double len = std::sqrt(len2);
  const double slack = tol / len;
  const double t0 = dot(c - a, d) / len2;
  const Point foot = a + t0 * d;
  const double h = distance(c, foot);
  if (h > r + tol) return 0;
  auto in_range = [&](double t) { return t >= -slack && t <= 1.0 + slack; };
  if (std::abs(h - r) <= tol) {
    if (!in_range(t0)) return 0;
    out[0] = foot;
    return 1;
  }
  const double s = std::sqrt(std::max(0.0, r * r - h * h)) / len;
  int count = 0;
  for (double t : {t0 - s, t0 + s}) {
    if (in_range(t)) out[count++] = a + std::clamp(t, 0.0, 1.0) * d;
  }
  return count;
}

}  // namespace detail

namespace {

double signed_area(const std::vector<Point>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += cross2(v[i], v[(i + 1) % v.size()]);
  return 0.5 * s;
}

bool segments_cross(Point a, Point b, Point c, Point d) {
  auto orient = [](Point p, Point q, Point r) { return cross2(q - p, r - p); };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d);
  const double o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return true;
  auto on_seg = [](Point p, Point q, Point r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  if (o1 == 0 && on_seg(a, b, c)) return true;
  if (o2 == 0 && on_seg(a, b, d)) return true;
  if (o3 == 0 && on_seg(c, d, a)) return true;
  if (o4 == 0 && on_seg(c, d, b)) return true;
  return false;
}

}  // namespace

Window Window::polygon(std::vector<Point> vertices) {
  if (vertices.size() < 3) throw InvalidArgument("polygon needs at least three vertices");
  for (auto& p : vertices) {
    if (!is_finite(p)) throw InvalidArgument("polygon vertex is not finite");
    p.z = 0.0;
  }
  double a = signed_area(vertices);
  if (a < 0) {
    std::reverse(vertices.begin(), vertices.end());
    a = -a;
  }
  double diam2 = 0.0;
  for (const auto& p : vertices)
    for (const auto& q : vertices) diam2 = std::max(diam2, dot(p - q, p - q));
  if (a <= kGeomTol * diam2) throw InvalidArgument("degenerate polygon (area below tolerance)");
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_cross(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]))
        throw InvalidArgument("polygon is not simple");
    }
  }
  Window w;
  w.kind_ = WindowKind::polygon;
  w.dim_ = 2;
  w.vertices_ = std::move(vertices);
  w.finish();
  return w;
}

Window Window::disc(Point center, double radius) {
  if (!is_finite(center) || !(radius > 0.0) || !std::isfinite(radius))
    throw InvalidArgument("disc window needs a finite positive radius");
  Window w;
  w.kind_ = WindowKind::disc;
  w.dim_ = 2;
  w.center_ = {center.x, center.y, 0.0};
  w.radius_ = radius;
  w.finish();
  return w;
}

Window Window::box(std::vector<double> sides) {
  if (sides.size() != 2 && sides.size() != 3) throw InvalidArgument("box window must have d = 2 or 3");
  for (double s : sides)
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("box sides must be finite and positive");
  Window w;
  w.kind_ = WindowKind::box;
  w.dim_ = static_cast<int>(sides.size());
  w.sides_ = std::move(sides);
  if (w.dim_ == 2) {
    const double a = w.sides_[0], b = w.sides_[1];
    w.vertices_ = {{0, 0, 0}, {a, 0, 0}, {a, b, 0}, {0, b, 0}};
  }
  w.finish();
  return w;
}

void Window::finish() {
  switch (kind_) {
    case WindowKind::polygon: {
      area_ = signed_area(vertices_);
      perimeter_ = 0.0;
      lo_ = hi_ = vertices_[0];
      for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto [a, b] = edge(i);
        perimeter_ += distance(a, b);
        lo_ = {std::min(lo_.x, a.x), std::min(lo_.y, a.y), 0.0};
        hi_ = {std::max(hi_.x, a.x), std::max(hi_.y, a.y), 0.0};
      }
      break;
    }
    case WindowKind::disc:
      area_ = std::numbers::pi * radius_ * radius_;
      perimeter_ = 2.0 * std::numbers::pi * radius_;
      lo_ = {center_.x - radius_, center_.y - radius_, 0.0};
      hi_ = {center_.x + radius_, center_.y + radius_, 0.0};
      break;
    case WindowKind::box: {
      area_ = 1.0;
      for (double s : sides_) area_ *= s;
      if (dim_ == 2) {
        perimeter_ = 2.0 * (sides_[0] + sides_[1]);
      } else {
        perimeter_ = 2.0 * (sides_[0] * sides_[1] + sides_[1] * sides_[2] + sides_[0] * sides_[2]);
      }
      lo_ = {};
      hi_ = {sides_[0], sides_[1], dim_ == 3 ? sides_[2] : 0.0};
      break;
    }
  }
}

double Window::diameter() const {
  switch (kind_) {
    case WindowKind::disc:
      return 2.0 * radius_;
    case WindowKind::box:
      return norm(hi_ - lo_);
    case WindowKind::polygon:
      break;
  }
  double d = 0.0;
  for (const auto& p : vertices_)
    for (const auto& q : vertices_) d = std::max(d, distance(p, q));
  return d;
}

bool Window::polygon_contains(Point p) const {
  // Winding number.
  int wn = 0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = vertices_[i];
    const Point b = vertices_[(i + 1) % n];
    const double side = cross2(b - a, p - a);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0) ++wn;
    } else {
      if (b.y <= p.y && side < 0) --wn;
    }
  }
  return wn != 0;
}

bool Window::contains(Point p, double tol) const {
  switch (kind_) {
    case WindowKind::disc:
      return distance(p, center_) <= radius_ + tol;
    case WindowKind::box:
      if (dim_ == 3) {
        return p.x >= -tol && p.y >= -tol && p.z >= -tol && p.x <= sides_[0] + tol && p.y <= sides_[1] + tol &&
               p.z <= sides_[2] + tol;
      }
      return p.x >= -tol && p.y >= -tol && p.x <= sides_[0] + tol && p.y <= sides_[1] + tol;
    case WindowKind::polygon:
      break;
  }
  if (polygon_contains(p)) return true;
  return tol > 0.0 && boundary_distance(p) <= tol;
}

double Window::boundary_distance(Point p) const {
  switch (kind_) {
    case WindowKind::disc:
      return std::abs(distance(p, center_) - radius_);
    case WindowKind::box:
      if (dim_ == 3) {
        if (!contains(p)) return distance_to(p);
        return std::min({p.x, p.y, p.z, sides_[0] - p.x, sides_[1] - p.y, sides_[2] - p.z});
      }
      break;
    case WindowKind::polygon:
      break;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto [a, b] = edge(i);
    best = std::min(best, detail::segment_distance(p, a, b));
  }
  return best;
}

Location Window::locate(Point p, double tol) const {
  if (boundary_distance(p) <= tol) return Location::boundary;
  return contains(p) ? Location::inside : Location::outside;
}

Point Window::project(Point p) const {
  switch (kind_) {
    case WindowKind::disc: {
      const double d = distance(p, center_);
      if (d <= radius_) return p;
      return center_ + (radius_ / d) * (p - center_);
    }
    case WindowKind::box:
      return {std::clamp(p.x, 0.0, sides_[0]), std::clamp(p.y, 0.0, sides_[1]),
              dim_ == 3 ? std::clamp(p.z, 0.0, sides_[2]) : 0.0};
    case WindowKind::polygon:
      break;
  }
  if (polygon_contains(p)) return p;
  Point best = vertices_[0];
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto [a, b] = edge(i);
    const Point q = detail::project_to_segment(p, a, b);
    const double d = distance(p, q);
    if (d < bd) {
      bd = d;
      best = q;
    }
  }
  return best;
}

double Window::distance_to(Point p) const { return distance(p, project(p)); }

double Window::farthest_distance(Point p) const {
  switch (kind_) {
    case WindowKind::disc:
      return distance(p, center_) + radius_;
    case WindowKind::box: {
      const double fx = std::max(std::abs(p.x), std::abs(p.x - sides_[0]));
      const double fy = std::max(std::abs(p.y), std::abs(p.y - sides_[1]));
      const double fz = dim_ == 3 ? std::max(std::abs(p.z), std::abs(p.z - sides_[2])) : std::abs(p.z);
      return std::sqrt(fx * fx + fy * fy + fz * fz);
    }
    case WindowKind::polygon:
      break;
  }
  double d = 0.0;
  for (const auto& v : vertices_) d = std::max(d, distance(p, v));
  return d;
}

bool Window::is_convex() const {
  if (kind_ != WindowKind::polygon) return true;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = vertices_[i], b = vertices_[(i + 1) % n], c = vertices_[(i + 2) % n];
    if (cross2(b - a, c - b) < 0.0) return false;
  }
  return true;
}

double Window::inradius_bound() const {
  if (kind_ == WindowKind::box) return 0.5 * *std::min_element(sides_.begin(), sides_.end());
  return 2.0 * area_ / perimeter_;
}

Point Window::interior_point() const {
  switch (kind_) {
    case WindowKind::disc:
      return center_;
    case WindowKind::box:
      return 0.5 * hi_;
    case WindowKind::polygon:
      break;
  }
  if (is_convex()) {
    Point c{};
    for (const auto& v : vertices_) c = c + v;
    return (1.0 / static_cast<double>(vertices_.size())) * c;
  }
  // Midpoint of the widest interior run along a horizontal scan line.
  const double y = lo_.y + (hi_.y - lo_.y) * 0.5123456789;
  std::vector<double> xs;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto [a, b] = edge(i);
    if ((a.y <= y) != (b.y <= y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
  }
  std::sort(xs.begin(), xs.end());
  double best_w = -1.0, best_x = 0.5 * (lo_.x + hi_.x);
  for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
    if (xs[i + 1] - xs[i] > best_w) {
      best_w = xs[i + 1] - xs[i];
      best_x = 0.5 * (xs[i] + xs[i + 1]);
    }
  }
  return {best_x, y, 0.0};
}

Window Window::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidArgument("scale factor must be positive");
  switch (kind_) {
    case WindowKind::disc:
      return disc(factor * center_, factor * radius_);
    case WindowKind::box: {
      auto s = sides_;
      for (auto& v : s) v *= factor;
      return box(std::move(s));
    }
    case WindowKind::polygon:
      break;
  }
  auto v = vertices_;
  for (auto& p : v) p = factor * p;
  return polygon(std::move(v));
}

nlohmann::json Window::to_json() const {
  using nlohmann::json;
  switch (kind_) {
    case WindowKind::disc:
      return json{{"kind", "disc"}, {"center", {center_.x, center_.y}}, {"radius", radius_}};
    case WindowKind::box:
      return json{{"kind", "box"}, {"d", dim_}, {"sides", sides_}};
    case WindowKind::polygon:
      break;
  }
  json verts = json::array();
  for (const auto& p : vertices_) verts.push_back({p.x, p.y});
  return json{{"kind", "polygon"}, {"vertices", verts}};
}

Window Window::from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "polygon") {
      std::vector<Point> v;
      for (const auto& p : j.at("vertices")) {
        if (p.size() != 2) throw InvalidArgument("polygon vertices must be [x,y] pairs");
        v.push_back({p[0].get<double>(), p[1].get<double>(), 0.0});
      }
      return polygon(std::move(v));
    }
    if (kind == "disc") {
      const auto& c = j.at("center");
      return disc({c.at(0).get<double>(), c.at(1).get<double>(), 0.0}, j.at("radius").get<double>());
    }
    if (kind == "box") {
      auto sides = j.at("sides").get<std::vector<double>>();
      if (j.contains("d") && j.at("d").get<std::size_t>() != sides.size())
        throw InvalidArgument("box: d does not match the number of sides");
      return box(std::move(sides));
    }
    throw InvalidArgument("unknown window kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed window JSON: ") + e.what());
  }
}

double window_area(const Window& w) { return w.area(); }
double window_perimeter(const Window& w) { return w.perimeter(); }
Location locate_point(Point p, const Window& w, double tol) { return w.locate(p, tol); }

CircleIntersection circle_circle_intersections(const Disk& a, const Disk& b, double tol) {
  CircleIntersection result;
  Point out[2];
  const int n = detail::intersect_circles(a.center, a.radius, b.center, b.radius, tol, out);
  if (n < 0) {
    result.degenerate = true;
    return result;
  }
  result.points.assign(out, out + n);
  return result;
}

std::vector<Point> circle_boundary_intersections(const Disk& a, const Window& w, double tol) {
  if (w.dim() != 2) throw UnsupportedDimension("circle_boundary_intersections requires a 2D window");
  std::vector<Point> result;
  Point out[2];
  if (w.kind() == WindowKind::disc) {
    const int n = detail::intersect_circles(a.center, a.radius, w.center(), w.radius(), tol, out);
    if (n > 0) result.assign(out, out + n);
    return result;
  }
  for (std::size_t i = 0; i < w.edge_count(); ++i) {
    const auto [p, q] = w.edge(i);
    const int n = detail::intersect_circle_segment(a.center, a.radius, p, q, tol, out);
    for (int m = 0; m < n; ++m) {
      const bool dup = std::any_of(result.begin(), result.end(),
                                   [&](Point r) { return distance(r, out[m]) <= 10.0 * tol; });
      if (!dup) result.push_back(out[m]);
    }
  }
  return result;
}

long long covering_number(const Window& w, double r) {
  if (!(r > 0.0)) throw InvalidArgument("covering_number requires r > 0");
  if (w.dim() == 3) {
    const double s = 2.0 * r / std::sqrt(3.0);
    long long count = 1;
    for (double side : w.sides()) count *= std::max(1LL, static_cast<long long>(std::ceil(side / s - 1e-9)));
    return count;
  }
  // A ball of radius r at the centre of a cell of side at most r*sqrt(2)
  // covers it. Cells whose centre lies outside w are split once; a piece of
  // diameter <= r meeting w is covered by one ball at the projection of its
  // centre onto w.
  const double s = r * std::numbers::sqrt2;
  const Point lo = w.bbox_lo(), hi = w.bbox_hi();
  auto meets = [&](Point clo, Point chi) {
    if (w.kind() == WindowKind::disc) {
      const Point q{std::clamp(w.center().x, clo.x, chi.x), std::clamp(w.center().y, clo.y, chi.y), 0.0};
      return distance(q, w.center()) <= w.radius();
    }
    if (w.contains(0.5 * (clo + chi))) return true;
    for (std::size_t e = 0; e < w.edge_count(); ++e) {
      const auto [a, b] = w.edge(e);
      if (detail::segment_hits_box(a, b, clo, chi)) return true;
    }
    return false;
  };
  auto count_cell = [&](auto&& self, Point clo, Point chi) -> long long {
    if (w.contains(0.5 * (clo + chi))) return 1;
    if (!meets(clo, chi)) return 0;
    if (distance(clo, chi) <= r) return 1;
    const Point mid = 0.5 * (clo + chi);
    return self(self, clo, mid) + self(self, Point{mid.x, clo.y, 0.0}, Point{chi.x, mid.y, 0.0}) +
           self(self, Point{clo.x, mid.y, 0.0}, Point{mid.x, chi.y, 0.0}) + self(self, mid, chi);
  };
  const long long nx = std::max(1LL, static_cast<long long>(std::ceil((hi.x - lo.x) / s - 1e-9)));
  const long long ny = std::max(1LL, static_cast<long long>(std::ceil((hi.y - lo.y) / s - 1e-9)));
  long long count = 0;
  for (long long i = 0; i < nx; ++i) {
    for (long long j = 0; j < ny; ++j) {
      const Point clo{lo.x + s * static_cast<double>(i), lo.y + s * static_cast<double>(j), 0.0};
      const Point chi{std::min(clo.x + s, hi.x), std::min(clo.y + s, hi.y), 0.0};
      count += count_cell(count_cell, clo, chi);
    }
  }
  return count;
}

}  // namespace jmcover
