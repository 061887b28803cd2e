#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "jmcover/coverage.hpp"
#include "jmcover/error.hpp"

using namespace jmcover;

namespace {

constexpr double kPi = std::numbers::pi;

Window lshape() { return Window::polygon({{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}}); }

Window random_polygon(std::mt19937_64& eng, int n) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Point> v;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * (i + 0.8 * U(eng)) / n;
    const double r = 0.2 + 0.3 * U(eng);
    v.push_back({0.5 + r * std::cos(a), 0.5 + r * std::sin(a)});
  }
  return Window::polygon(v);
}

std::vector<Window> windows(std::mt19937_64& eng) {
  return {Window::unit_square(), Window::disc({0.5, 0.5}, 0.45), lshape(),
          Window::polygon({{0, 0}, {1, 0}, {0, 1}}), random_polygon(eng, 7), random_polygon(eng, 12)};
}

MarkedPointSet points_in(const Window& w, int n, double y_lo, double y_hi, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Engine e(eng());
  MarkedPointSet s;
  s.window = w;
  for (int i = 0; i < n; ++i) {
    s.points.push_back(sample_uniform(w, e));
    s.marks.push_back(y_lo + (y_hi - y_lo) * U(eng));
  }
  return s;
}

GrowthConfiguration seeds_in(const Window& w, int n, double t_max, std::mt19937_64& eng) {
  GrowthConfiguration g;
  g.seeds = points_in(w, n, 0.0, t_max, eng);
  g.seeds.mark_kind = MarkKind::birth_time;
  return g;
}

// Max of a field over a dense random sample of w: a lower bound on the true max.
double sampled_max(const OracleField& f, const Window& w, int n, std::uint64_t seed) {
  Engine e(seed);
  double m = -kInfinity;
  for (int i = 0; i < n; ++i) m = std::max(m, f(sample_uniform(w, e)));
  for (const auto& v : w.vertices()) m = std::max(m, f(v));
  return m;
}

}  // namespace

TEST_CASE("closed and open cover counts") {
  const std::vector<Disk> d = {{{0, 0}, 1}, {{2, 0}, 1}, {{0, 0}, 0.5}};
  const CoverCount c = cover_count({1, 0}, d, 1e-12);
  CHECK(c.closed == 2);
  CHECK(c.open == 0);
  const CoverCount in = cover_count({0.1, 0}, d, 1e-12);
  CHECK(in.closed == 2);
  CHECK(in.open == 2);
}

TEST_CASE("single disks on simple windows") {
  const Window sq = Window::unit_square();
  const double tol = 1e-9;
  CHECK(is_k_covered(sq, {{{0.5, 0.5}, std::sqrt(0.5) + 1e-6}}, 1, tol).covered);
  const CoverageVerdict v = is_k_covered(sq, {{{0.5, 0.5}, std::sqrt(0.5) - 1e-6}}, 1, tol);
  CHECK(!v.covered);
  REQUIRE(v.witness);
  CHECK(v.deficit == 1);
  CHECK(distance(*v.witness, {0.5, 0.5}) > std::sqrt(0.5) - 1e-6);
  CHECK(!is_k_covered(sq, {{{0.5, 0.5}, 1.0}}, 2, tol).covered);
  CHECK(is_k_covered(sq, {{{0.5, 0.5}, 1.0}, {{0.4, 0.5}, 1.0}}, 2, tol).covered);
  const CoverageVerdict e = is_k_covered(sq, {}, 1, tol);
  CHECK(!e.covered);
  REQUIRE(e.witness);
  CHECK(sq.contains(*e.witness));
  const Window d = Window::disc({0, 0}, 1);
  CHECK(is_k_covered(d, {{{0.01, 0}, 1.02}}, 1, tol).covered);
  CHECK(!is_k_covered(d, {{{0.05, 0}, 1.02}}, 1, tol).covered);
  // Two half-covering disks leave a gap at the seam.
  CHECK(!is_k_covered(sq, {{{0.0, 0.5}, 0.55}, {{1.0, 0.5}, 0.55}}, 1, tol).covered);
  CHECK(is_k_covered(sq, {{{0.25, 0.5}, 0.56}, {{0.75, 0.5}, 0.56}}, 1, tol).covered);
  CHECK_THROWS_AS(is_k_covered(Window::box({1, 1, 1}), {}, 1, tol), UnsupportedDimension);
}

TEST_CASE("vacancy hidden between three disks is found") {
  // Three unit disks around the origin leave a small hole at the centre.
  const Window w = Window::disc({0, 0}, 0.5);
  std::vector<Disk> d;
  const double r = 1.0, c = 1.0 + 1e-4;
  for (int i = 0; i < 3; ++i) d.push_back({{c * std::cos(2 * kPi * i / 3), c * std::sin(2 * kPi * i / 3)}, r});
  const CoverageVerdict v = is_k_covered(w, d, 1, 1e-10);
  CHECK(!v.covered);
  REQUIRE(v.witness);
  CHECK(cover_count(*v.witness, d, 0.0).closed == 0);
  for (auto& x : d) x.radius = c + 1e-3;
  CHECK(is_k_covered(w, d, 1, 1e-10).covered);
}

TEST_CASE("verifier agrees with the certified grid oracle") {
  std::mt19937_64 eng(12);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int conclusive = 0, total = 0;
  for (const Window& w : windows(eng)) {
    for (int rep = 0; rep < 60; ++rep) {
      const int k = 1 + rep % 3;
      const MarkedPointSet pts = points_in(w, 20 + rep, 0.6, 1.0, eng);
      const double r = 0.12 + 0.2 * U(eng);
      const auto disks = disks_at_scale(pts, r);
      const CoverageVerdict v = is_k_covered(w, disks, k, default_geom_tol(w));
      const CertifiedInterval ci = grid_oracle_max(OracleField::disks(disks, k), w, w.diameter() / 200);
      ++total;
      if (!v.covered) {
        REQUIRE(v.witness);
        CHECK(w.contains(*v.witness, 1e-9));
        CHECK(cover_count(*v.witness, disks, 0.0).closed < k);
      }
      if (ci.upper < 1.0) {
        ++conclusive;
        CHECK(v.covered);
      } else if (ci.lower > 1.0) {
        ++conclusive;
        CHECK(!v.covered);
      }
    }
  }
  CHECK(conclusive > total / 2);
}

TEST_CASE("thresholds bracket the coverage transition") {
  std::mt19937_64 eng(13);
  for (const Window& w : windows(eng)) {
    for (int k : {1, 2}) {
      const MarkedPointSet pts = points_in(w, 40, 0.5, 1.0, eng);
      const double tol = default_bisection_tol(w);
      const ThresholdResult res = coverage_threshold(w, pts, k, tol, w.diameter() / 300);
      const double R = res.value;
      CHECK(is_k_covered(w, disks_at_scale(pts, R + 2 * tol), k, default_geom_tol(w)).covered);
      CHECK(!is_k_covered(w, disks_at_scale(pts, R - 2 * tol), k, default_geom_tol(w)).covered);
      REQUIRE(res.oracle);
      CHECK(*res.oracle_consistent);
      CHECK(res.oracle->lower <= R + tol);
      CHECK(sampled_max(OracleField::spbm(pts, k), w, 20000, 1) <= R + tol);
      CHECK(xi_spbm(w.vertices().empty() ? w.center() : w.vertices()[0], pts, k) <= R + tol);
    }
  }
}

TEST_CASE("threshold with too few usable points is infinite") {
  MarkedPointSet pts;
  pts.points = {{0.5, 0.5}, {0.2, 0.2}};
  pts.marks = {1.0, 0.0};
  CHECK(std::isinf(coverage_threshold(Window::unit_square(), pts, 2, 1e-7).value));
  CHECK(coverage_threshold(Window::unit_square(), pts, 1, 1e-9).value == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));
}

TEST_CASE("cover times: closed forms") {
  GrowthConfiguration g;
  g.seeds.points = {{0, 0}};
  g.seeds.marks = {0.0};
  g.seeds.mark_kind = MarkKind::birth_time;
  const Window sq = Window::unit_square();
  CHECK(jm_cover_time(sq, g, 1e-10) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  g.seeds.points.push_back({1, 1});
  g.seeds.marks.push_back(0.5);
  // Last point is on the edge x = 1 where sqrt(1 + y^2) = 1.5 - y, i.e. y = 5/12.
  const double T = jm_cover_time(sq, g, 1e-10);
  CHECK(T == doctest::Approx(13.0 / 12.0).epsilon(1e-8));
  g.seeds.horizon = 0.9;
  CHECK_THROWS_AS(jm_cover_time(sq, g, 1e-10), InsufficientHalo);
}

TEST_CASE("cover times match the field maximum") {
  std::mt19937_64 eng(14);
  for (const Window& w : windows(eng)) {
    for (int n : {5, 30, 120}) {
      const GrowthConfiguration g = seeds_in(w, n, 0.3, eng);
      const double tol = default_bisection_tol(w);
      const ThresholdResult res = jm_cover_time_checked(w, g, tol, w.diameter() / 300);
      const double T = res.value;
      CHECK(*res.oracle_consistent);
      CHECK(sampled_max(OracleField::jm(g), w, 20000, 2) <= T + tol);
      CHECK(is_k_covered(w, disks_at_time(g, T + 2 * tol), 1, default_geom_tol(w)).covered);
      CHECK(!is_k_covered(w, disks_at_time(g, T - 2 * tol), 1, default_geom_tol(w)).covered);
      const Point last = last_covered_point(w, g, tol);
      CHECK(w.contains(last, 1e-9));
      CHECK(xi_jm(last, g) >= T - 10 * tol);
    }
  }
}

TEST_CASE("last covered point of a Boolean model") {
  std::mt19937_64 eng(15);
  const Window w = Window::unit_square();
  const MarkedPointSet pts = points_in(w, 50, 0.5, 1.0, eng);
  const double tol = default_bisection_tol(w);
  const double R = coverage_threshold(w, pts, 1, tol).value;
  const Point last = last_covered_point(w, pts, 1, tol);
  CHECK(xi_spbm(last, pts, 1) >= R - 10 * tol);
}

TEST_CASE("fields agree with the oracle wrappers") {
  std::mt19937_64 eng(16);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Window w = Window::unit_square();
  const GrowthConfiguration g = seeds_in(w, 40, 0.2, eng);
  const MarkedPointSet pts = points_in(w, 40, 0.3, 1.0, eng);
  const OracleField fj = OracleField::jm(g), fs = OracleField::spbm(pts, 2);
  for (int i = 0; i < 200; ++i) {
    const Point x{U(eng), U(eng)};
    CHECK(fj(x) == xi_jm(x, g));
    CHECK(fs(x) == xi_spbm(x, pts, 2));
  }
  CHECK(fj.lipschitz() == 1.0);
  CHECK(fs.lipschitz() == doctest::Approx(1.0 / *std::min_element(pts.marks.begin(), pts.marks.end())));
}

TEST_CASE("grid oracle brackets the maximum on random polygons") {
  std::mt19937_64 eng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    const Window w = rep % 5 == 0 ? Window::disc({0.5, 0.5}, 0.4) : random_polygon(eng, 3 + rep % 11);
    std::vector<Disk> d;
    for (int i = 0; i < 1 + rep % 6; ++i) d.push_back({{U(eng), U(eng)}, 1.0});
    const OracleField f = OracleField::disks(d, 1);
    const double h = w.inradius_bound() / (2 + rep % 7);
    const CertifiedInterval ci = grid_oracle_max(f, w, h);
    CHECK(ci.lower <= ci.upper);
    CHECK(ci.upper - ci.lower <= h * std::sqrt(2.0) / 2 + 1e-9);
    CHECK(sampled_max(f, w, 50000, 3 + rep) <= ci.upper);
    CHECK(f(grid_oracle_argmax(f, w, h)) == ci.lower);
  }
}

TEST_CASE("grid oracle: serial and parallel agree bitwise") {
  std::mt19937_64 eng(18);
  for (const Window& w : windows(eng)) {
    const GrowthConfiguration g = seeds_in(w, 200, 0.1, eng);
    const OracleField f = OracleField::jm(g);
    const CertifiedInterval a = grid_oracle_max(f, w, w.diameter() / 400);
    const CertifiedInterval b = grid_oracle_max_serial(f, w, w.diameter() / 400);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
  }
  CHECK_THROWS_AS(grid_oracle_max(OracleField::jm(seeds_in(Window::unit_square(), 3, 0.1, eng)),
                                  Window::unit_square(), 2.0),
                  InvalidArgument);
}

TEST_CASE("grid oracle in three dimensions") {
  GrowthConfiguration g;
  g.seeds.dim = 3;
  g.seeds.points = {{0, 0, 0}};
  g.seeds.marks = {0.0};
  g.seeds.mark_kind = MarkKind::birth_time;
  g.seeds.window = Window::box({1, 1, 1});
  const CertifiedInterval ci = grid_oracle_max(OracleField::jm(g), Window::box({1, 1, 1}), 0.05);
  CHECK(ci.contains(std::sqrt(3.0)));
}

TEST_CASE("Wilson interval") {
  const ProportionEstimate e = wilson_interval(50, 100);
  const double z = 1.959963984540054, n = 100, p = 0.5;
  const double centre = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double half = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  CHECK(e.p == 0.5);
  CHECK(e.lo == doctest::Approx(centre - half).epsilon(1e-12));
  CHECK(e.hi == doctest::Approx(centre + half).epsilon(1e-12));
  const ProportionEstimate zero = wilson_interval(0, 20);
  CHECK(zero.lo == doctest::Approx(0.0));
  CHECK(zero.hi > 0.0);
  CHECK(wilson_interval(20, 20).hi == doctest::Approx(1.0));
}

TEST_CASE("coverage probability estimates are reproducible across thread counts") {
  const Window w = Window::unit_square();
  const CoverageModel jm = JmModel{200.0, 0.4};
  const ProportionEstimate a = coverage_probability_estimate(w, jm, true, 300, 5, 1);
  const ProportionEstimate b = coverage_probability_estimate(w, jm, true, 300, 5, 4);
  CHECK(a.successes == b.successes);
  CHECK(a.successes > 0);
  CHECK(a.successes < 300);
  const CoverageModel bm = SpbmModel{300.0, RadiusLaw::uniform(1.0), 0.2, 1};
  CHECK(coverage_probability_estimate(w, bm, false, 200, 6, 1).successes ==
        coverage_probability_estimate(w, bm, false, 200, 6, 3).successes);
  // More grains can only help when the sample is nested; in law the probability rises.
  const CoverageModel more = SpbmModel{1200.0, RadiusLaw::uniform(1.0), 0.2, 1};
  CHECK(coverage_probability_estimate(w, more, true, 300, 7).p >= coverage_probability_estimate(w, bm, true, 300, 7).p);
}

TEST_CASE("a coverage event is the same as comparing the cover time") {
  const Window w = Window::unit_square();
  for (std::uint64_t s = 0; s < 30; ++s) {
    const bool ev = sample_coverage_event(w, JmModel{100.0, 0.35}, true, RngSpec{s, 0});
    const MarkedPointSet seeds = sample_spacetime_poisson(w, 100.0, 0.35, RngSpec{s, 0}.child(0));
    GrowthConfiguration g;
    g.seeds = seeds;
    const bool direct = is_k_covered(w, disks_at_time(g, 0.35), 1, default_geom_tol(w)).covered;
    CHECK(ev == direct);
  }
}
