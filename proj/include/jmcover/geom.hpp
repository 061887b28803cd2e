#pragma once

// Planar (and minimal 3D) geometry kernel: points, disks, windows and the
// intersection predicates used by the coverage verifier.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace jmcover {

/// Relative geometric tolerance, in units of the window diameter.
inline constexpr double kGeomTol = 1e-9;

/// A point in R^2 or R^3. Planar code leaves z at zero, so the full
/// Euclidean norm is also the planar one.
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Point a) { return std::sqrt(dot(a, a)); }
inline double distance(Point a, Point b) { return norm(a - b); }
inline double cross2(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline Point perp2(Point a) { return {-a.y, a.x, 0.0}; }
inline Point normalized(Point a) {
  const double n = norm(a);
  return n > 0.0 ? (1.0 / n) * a : a;
}
bool is_finite(Point p);

struct Disk {
  Point center;
  double radius = 0.0;
};

enum class WindowKind { polygon, disc, box };
enum class Location { inside, boundary, outside };

/// Compact observation region A. Polygons are stored counterclockwise;
/// a 2D box is the rectangle [0,a]x[0,b] and behaves like a polygon.
class Window {
 public:
  static Window polygon(std::vector<Point> vertices);
  static Window disc(Point center, double radius);
  static Window box(std::vector<double> sides);
  static Window unit_square() { return box({1.0, 1.0}); }

  WindowKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double area() const { return area_; }
  double perimeter() const { return perimeter_; }
  double diameter() const;

  /// Polygon vertices (also for a 2D box); empty for discs and 3D boxes.
  std::span<const Point> vertices() const { return vertices_; }
  std::size_t edge_count() const { return vertices_.size(); }
  std::pair<Point, Point> edge(std::size_t i) const {
    return {vertices_[i], vertices_[(i + 1) % vertices_.size()]};
  }
  bool has_edges() const { return !vertices_.empty(); }

  Point center() const { return center_; }
  double radius() const { return radius_; }
  std::span<const double> sides() const { return sides_; }

  Point bbox_lo() const { return lo_; }
  Point bbox_hi() const { return hi_; }

  /// Closed containment, widened by tol.
  bool contains(Point p, double tol = 0.0) const;
  Location locate(Point p, double tol) const;
  /// Distance from p to the window (zero inside).
  double distance_to(Point p) const;
  /// Distance from p to the boundary of the window.
  double boundary_distance(Point p) const;
  /// Nearest point of the window.
  Point project(Point p) const;
  double farthest_distance(Point p) const;
  bool is_convex() const;
  /// 2|A|/|dA|: the inradius for discs, boxes and tangential polygons.
  double inradius_bound() const;
  /// A point guaranteed to lie in the interior.
  Point interior_point() const;
  /// The dilated window {Lx : x in A}.
  Window scaled(double factor) const;

  nlohmann::json to_json() const;
  static Window from_json(const nlohmann::json& j);

 private:
  Window() = default;
  void finish();
  bool polygon_contains(Point p) const;

  WindowKind kind_ = WindowKind::polygon;
  int dim_ = 2;
  std::vector<Point> vertices_;
  Point center_;
  double radius_ = 0.0;
  std::vector<double> sides_;
  Point lo_, hi_;
  double area_ = 0.0;
  double perimeter_ = 0.0;
};

double window_area(const Window& w);
double window_perimeter(const Window& w);
Location locate_point(Point p, const Window& w, double tol);

struct CircleIntersection {
  std::vector<Point> points;
  bool degenerate = false;  // concentric or identical circles
};

CircleIntersection circle_circle_intersections(const Disk& a, const Disk& b, double tol);
std::vector<Point> circle_boundary_intersections(const Disk& a, const Window& w, double tol);

/// Greedy grid upper bound on the covering number kappa(w, r).
long long covering_number(const Window& w, double r);

namespace detail {

/// Allocation-free circle/circle solve. Returns the number of points written
/// to out, or -1 for concentric circles.
int intersect_circles(Point c1, double r1, Point c2, double r2, double tol, Point out[2]);

/// Circle/segment solve, parameter clamped to the segment within tol.
int intersect_circle_segment(Point c, double r, Point a, Point b, double tol, Point out[2]);

Point project_to_segment(Point p, Point a, Point b);
double segment_distance(Point p, Point a, Point b);
bool segment_hits_box(Point a, Point b, Point lo, Point hi);

}  // namespace detail

}  // namespace jmcover
