#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "jmcover/error.hpp"
#include "jmcover/processes.hpp"

using namespace jmcover;

namespace {

constexpr double kPi = std::numbers::pi;

// |(unit square + r-ball) \ unit square|
double square_ring(double r) { return 4 * r + kPi * r * r; }

struct Mean {
  double sum = 0.0;
  double sum2 = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    sum2 += v * v;
    ++n;
  }
  double mean() const { return sum / n; }
  double se() const { return std::sqrt(std::max(0.0, sum2 / n - mean() * mean()) / n); }
};

}  // namespace

TEST_CASE("random streams are reproducible and distinct") {
  const RngSpec a{42, 3};
  Engine e1 = a.engine(), e2 = a.engine();
  for (int i = 0; i < 10; ++i) CHECK(e1() == e2());
  CHECK(a.child(0) == a.child(0));
  CHECK(!(a.child(0) == a.child(1)));
  CHECK(RngSpec{42, 3}.engine()() != RngSpec{42, 4}.engine()());
  CHECK(RngSpec{42, 3}.engine()() != RngSpec{43, 3}.engine()());
  CHECK(a.child(1).engine()() != a.child(2).engine()());
}

TEST_CASE("radius-law moments") {
  CHECK(RadiusLaw::constant(2.0).moment(3) == doctest::Approx(8.0));
  CHECK(RadiusLaw::uniform(2.0).moment(2) == doctest::Approx(4.0 / 3.0));
  CHECK(RadiusLaw::exponential(2.0).moment(3) == doctest::Approx(6.0 / 8.0));
  CHECK(RadiusLaw::pareto(3.0, 2.0).moment(2) == doctest::Approx(3.0 * 4.0 / 1.0));
  CHECK(std::isinf(RadiusLaw::pareto(1.5).moment(2)));
  CHECK(RadiusLaw::pareto(1.5).moment(1) == doctest::Approx(3.0));
  CHECK(moment(RadiusLaw::uniform(1.0), 0) == doctest::Approx(1.0));
  CHECK(RadiusLaw::uniform(3.0).support_max() == 3.0);
  CHECK(RadiusLaw::uniform(3.0).support_min() == 0.0);
  CHECK(!RadiusLaw::exponential(1.0).bounded());
  CHECK(RadiusLaw::pareto(2.0, 0.5).support_min() == 0.5);
}

TEST_CASE("radius-law sampling matches moments") {
  Engine eng(4);
  for (const RadiusLaw& law : {RadiusLaw::constant(0.7), RadiusLaw::uniform(2.0), RadiusLaw::exponential(3.0),
                               RadiusLaw::pareto(4.5, 0.3)}) {
    Mean m1, m2;
    for (int i = 0; i < 200000; ++i) {
      const double y = law.sample(eng);
      CHECK_FALSE(y < law.support_min());
      m1.add(y);
      m2.add(y * y);
    }
    CHECK(std::abs(m1.mean() - law.moment(1)) <= 5 * m1.se() + 1e-9);
    CHECK(std::abs(m2.mean() - law.moment(2)) <= 5 * m2.se() + 1e-9);
  }
}

TEST_CASE("radius-law parsing") {
  CHECK(RadiusLaw::parse("constant:1.5") == RadiusLaw::constant(1.5));
  CHECK(RadiusLaw::parse("uniform:2") == RadiusLaw::uniform(2.0));
  CHECK(RadiusLaw::parse("exp:3") == RadiusLaw::exponential(3.0));
  CHECK(RadiusLaw::parse("pareto:1.5") == RadiusLaw::pareto(1.5, 1.0));
  CHECK(RadiusLaw::parse("pareto:2.5,0.1") == RadiusLaw::pareto(2.5, 0.1));
  for (const RadiusLaw& law : {RadiusLaw::constant(0.25), RadiusLaw::uniform(3.0), RadiusLaw::exponential(0.5),
                               RadiusLaw::pareto(1.5, 2.0)})
    CHECK(RadiusLaw::parse(law.to_string()) == law);
  for (const char* bad : {"constant", "constant:-1", "uniform:0", "exp:abc", "pareto:0", "pareto:1,-1", "gamma:2",
                          "constant:1x"})
    CHECK_THROWS_AS(RadiusLaw::parse(bad), InvalidArgument);
}

TEST_CASE("marked Poisson sample") {
  const Window w = Window::disc({0.5, 0.5}, 0.45);
  Mean count;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const MarkedPointSet p = sample_marked_poisson(w, 50.0, RadiusLaw::uniform(1.0), RngSpec{1, s});
    count.add(static_cast<double>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(w.contains(p.points[i]));
      CHECK(p.marks[i] <= 1.0);
    }
    CHECK(p.mark_kind == MarkKind::radius);
  }
  CHECK(std::abs(count.mean() - 50.0 * w.area()) < 5 * count.se());
  const MarkedPointSet a = sample_marked_poisson(w, 50.0, RadiusLaw::uniform(1.0), RngSpec{9, 9});
  const MarkedPointSet b = sample_marked_poisson(w, 50.0, RadiusLaw::uniform(1.0), RngSpec{9, 9});
  CHECK(a.points == b.points);
  CHECK(a.marks == b.marks);
  CHECK_THROWS_AS(sample_marked_poisson(w, -1.0, RadiusLaw::uniform(1.0), RngSpec{}), InvalidArgument);
}

TEST_CASE("space-time seeds") {
  const Window w = Window::unit_square();
  Mean count;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const MarkedPointSet p = sample_spacetime_poisson(w, 100.0, 0.3, RngSpec{2, s}, 0.1);
    count.add(static_cast<double>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(w.contains(p.points[i]));
      CHECK(p.marks[i] >= 0.1);
      CHECK(p.marks[i] <= 0.3);
    }
    CHECK(p.mark_kind == MarkKind::birth_time);
    CHECK(p.horizon == 0.3);
  }
  CHECK(std::abs(count.mean() - 20.0) < 5 * count.se());
}

TEST_CASE("halo seeds reach the window and grow incrementally") {
  const Window w = Window::unit_square();
  const double rho = 200.0, t1 = 0.2, t2 = 0.35;
  Mean full, inc;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const MarkedPointSet h = sample_halo(w, rho, t2, RngSpec{3, s});
    full.add(static_cast<double>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) {
      CHECK(!w.contains(h.points[i]));
      CHECK(h.marks[i] + w.distance_to(h.points[i]) <= t2 + 1e-12);
    }
    const MarkedPointSet d = sample_halo(w, rho, t2, RngSpec{4, s}, t1);
    inc.add(static_cast<double>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(d.marks[i] + w.distance_to(d.points[i]) <= t2 + 1e-12);
      CHECK(d.marks[i] + w.distance_to(d.points[i]) > t1 - 1e-12);
    }
  }
  // E|halo(t)| = rho * int_0^t |w_(t-s) \ w| ds = rho (2 t^2 + pi t^3 / 3)
  auto expected = [&](double t) { return rho * (2 * t * t + kPi * t * t * t / 3); };
  CHECK(std::abs(full.mean() - expected(t2)) < 5 * full.se());
  CHECK(std::abs(inc.mean() - (expected(t2) - expected(t1))) < 5 * inc.se());
}

TEST_CASE("ring of outside grains") {
  const Window w = Window::unit_square();
  Mean count;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const MarkedPointSet r = sample_marked_ring(w, 80.0, RadiusLaw::uniform(0.1), 0.3, RngSpec{5, s}, 0.1);
    count.add(static_cast<double>(r.size()));
    for (const auto& p : r.points) {
      CHECK(w.distance_to(p) > 0.1 - 1e-12);
      CHECK(w.distance_to(p) <= 0.3 + 1e-12);
    }
  }
  CHECK(std::abs(count.mean() - 80.0 * (square_ring(0.3) - square_ring(0.1))) < 5 * count.se());
}

TEST_CASE("uniform points in windows") {
  Engine eng(6);
  const Window tri = Window::polygon({{0, 0}, {1, 0}, {0, 1}});
  Mean x;
  for (int i = 0; i < 100000; ++i) {
    const Point p = sample_uniform(tri, eng);
    CHECK(tri.contains(p));
    x.add(p.x);
  }
  CHECK(std::abs(x.mean() - 1.0 / 3.0) < 5 * x.se());
  const Window cube = Window::box({1, 2, 3});
  for (int i = 0; i < 1000; ++i) CHECK(cube.contains(sample_uniform(cube, eng)));
}

TEST_CASE("truncation partitions the marks") {
  const MarkedPointSet p = sample_marked_poisson(Window::unit_square(), 500.0, RadiusLaw::exponential(1.0), RngSpec{7, 0});
  const auto [lo, hi] = truncate_marks(p, 1.0);
  CHECK(lo.size() + hi.size() == p.size());
  for (double m : lo.marks) CHECK(m <= 1.0);
  for (double m : hi.marks) CHECK(m > 1.0);
  const MarkedPointSet g = sample_spacetime_poisson(Window::unit_square(), 10.0, 1.0, RngSpec{7, 1});
  CHECK_THROWS_AS(truncate_marks(g, 0.5), InvalidArgument);
}

TEST_CASE("validation and append") {
  MarkedPointSet p;
  p.points = {{0.1, 0.1}};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.marks = {-1.0};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.marks = {1.0};
  CHECK_NOTHROW(p.validate());
  MarkedPointSet q = p;
  q.append(p);
  CHECK(q.size() == 2);
}

TEST_CASE("CSV round trip is exact") {
  const auto dir = std::filesystem::temp_directory_path() / "jmcover_test_processes";
  std::filesystem::create_directories(dir);
  const MarkedPointSet p =
      sample_marked_poisson(Window::disc({0, 0}, 2.0), 20.0, RadiusLaw::pareto(2.5, 0.1), RngSpec{8, 0});
  write_marked_points(p, dir / "pts.csv");
  const MarkedPointSet q = read_marked_points(dir / "pts.csv");
  CHECK(q.points == p.points);
  CHECK(q.marks == p.marks);
  CHECK(q.mark_kind == p.mark_kind);
  CHECK(q.window.kind() == WindowKind::disc);
  CHECK(q.intensity == p.intensity);

  const MarkedPointSet g = sample_spacetime_poisson(Window::box({1, 1, 1}), 30.0, 0.5, RngSpec{8, 1});
  write_marked_points(g, dir / "seeds.csv");
  const MarkedPointSet h = read_marked_points(dir / "seeds.csv");
  CHECK(h.points == g.points);
  CHECK(h.marks == g.marks);
  CHECK(h.dim == 3);
  CHECK(h.mark_kind == MarkKind::birth_time);
  CHECK(h.horizon == g.horizon);
  CHECK_THROWS_AS(read_marked_points(dir / "missing.csv"), Error);
  std::filesystem::remove_all(dir);
}
